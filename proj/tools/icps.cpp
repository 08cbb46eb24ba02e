// Command-line front end: stability checks, stable-set solving, improvement
// dynamics, parameter sweeps, value-surface grids, and the proposition suite.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "icps/config.hpp"
#include "icps/report.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> concept_name;
  std::optional<std::string> out_dir;
  bool use_float = false;
};

void write_output(const Options& opt, const std::string& filename,
                  const std::string& body) {
  std::cout << body;
  if (!opt.out_dir) return;
  std::filesystem::create_directories(*opt.out_dir);
  std::ofstream f(std::filesystem::path(*opt.out_dir) / filename,
                  std::ios::binary);
  f << body;
}

icps::ScenarioConfig load_config(const Options& opt) {
  std::ifstream f(opt.config_path);
  if (!f) throw icps::InvalidSpec("cannot open config: " + opt.config_path);
  icps::Json doc = icps::Json::parse(f);
  auto sc = icps::parse_scenario(doc);
  if (opt.seed) sc.seed = *opt.seed;
  if (opt.mode) {
    auto m = icps::cfg::mode_of(*opt.mode);
    if (sc.generate) sc.generate->mode = m;
    if (sc.market) {
      sc.market->mode = m;
      sc.market->validate();
    }
  }
  if (opt.concept_name)
    sc.concepts = {icps::cfg::concept_of(*opt.concept_name)};
  return sc;
}

template <class S>
int run_command(const std::string& cmd, const icps::ScenarioConfig& sc,
                const Options& opt) {
  using namespace icps;
  auto menu = to_scalar<S>(sc.menu);
  std::optional<SequentialProtocol<S>> protocol;
  if (sc.protocol) protocol = to_scalar<S>(*sc.protocol);
  const SequentialProtocol<S>* proto_ptr = protocol ? &*protocol : nullptr;
  ProtocolOverrides<S> overrides;
  for (const auto& o : sc.protocol_overrides)
    overrides[{o.firm, o.worker}] = to_scalar<S>(o.protocol);
  const ProtocolOverrides<S>* ov_ptr =
      overrides.empty() ? nullptr : &overrides;
  std::optional<NtuUtilityTable<S>> ntu;
  if (sc.ntu) ntu = to_scalar<S>(*sc.ntu);
  const NtuUtilityTable<S>* ntu_ptr = ntu ? &*ntu : nullptr;

  if (cmd == "sweep") {
    if (!sc.sweep) throw InvalidSpec("sweep subcommand needs a sweep block");
    SurplusTable<S> surplus =
        sc.market ? to_scalar<S>(sc.market->surplus)
                  : SurplusTable<S>::two_grade(S(4), S(2), S(1));
    auto result = run_sweep(*sc.sweep, surplus);
    write_output(opt, "sweep.csv", result.csv);
    if (opt.out_dir) {
      std::ofstream notes(std::filesystem::path(*opt.out_dir) / "sweep_notes.txt",
                          std::ios::binary);
      for (const auto& n : result.notes) notes << n << '\n';
    } else {
      for (const auto& n : result.notes) std::cerr << n << '\n';
    }
    return 0;
  }
  if (cmd == "surface") {
    if (!sc.surface)
      throw InvalidSpec("surface subcommand needs a surface block");
    SurplusTable<S> surplus =
        sc.market ? to_scalar<S>(sc.market->surplus)
                  : SurplusTable<S>::two_grade(S(4), S(2), S(1));
    write_output(opt, "surface.csv", run_surface(*sc.surface, surplus));
    return 0;
  }

  Market<S> market = scenario_market<S>(sc);
  if (cmd == "check") {
    Allocation<S> alloc =
        sc.allocation ? to_scalar<S>(*sc.allocation)
                      : Allocation<S>::equal_split(
                            market, max_welfare_matching(market));
    auto j = run_check(market, alloc, menu, sc.concepts, proto_ptr, ntu_ptr,
                       ov_ptr);
    write_output(opt, "check.json", j.dump(2) + "\n");
    return j.at("stable").template get<bool>() ? 0 : 1;
  }
  if (cmd == "solve") {
    auto j = run_solve(market, menu, sc.concepts, proto_ptr, ntu_ptr,
                       sc.tested_standing, ov_ptr);
    write_output(opt, "solve.json", j.dump(2) + "\n");
    return 0;
  }
  if (cmd == "dynamics") {
    Allocation<S> start =
        sc.allocation ? to_scalar<S>(*sc.allocation)
                      : Allocation<S>::equal_split(market,
                                                   Matching(market.n_firms()));
    auto j = run_dynamics(market, start, menu);
    write_output(opt, "dynamics.json", j.dump(2) + "\n");
    return j.at("terminal_stable").template get<bool>() ? 0 : 1;
  }
  if (cmd == "props") {
    auto checks =
        run_props(market, menu, proto_ptr, ntu_ptr, sc.tested_standing);
    auto j = props_to_json(checks);
    write_output(opt, "props.json", j.dump(2) + "\n");
    return j.at("all_pass").template get<bool>() ? 0 : 1;
  }
  throw InvalidSpec("unknown subcommand: " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matching-market stability solver with costly pair testing"};
  app.require_subcommand(1);
  Options opt;
  std::string mode_arg, concept_arg, out_arg;
  std::uint64_t seed_arg = 0;
  std::vector<CLI::App*> subs;
  for (const char* name :
       {"check", "solve", "dynamics", "sweep", "surface", "props"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "scenario config (JSON)")
        ->required();
    auto* seed = sub->add_option("--seed", seed_arg, "override the seed");
    auto* mode = sub->add_option("--mode", mode_arg, "ex-ante | realized")
                     ->check(CLI::IsMember({"ex-ante", "realized"}));
    auto* concept_opt =
        sub->add_option("--concept", concept_arg,
                        "bayes | icps | endog | seq | ntu")
            ->check(CLI::IsMember({"bayes", "icps", "endog", "seq", "ntu"}));
    auto* out = sub->add_option("--out", out_arg, "output directory");
    sub->add_flag("--float", opt.use_float, "IEEE double arithmetic");
    auto* exact = sub->add_flag("--exact", "exact rational arithmetic (default)");
    exact->excludes("--float");
    sub->parse_complete_callback([&, seed, mode, concept_opt, out]() {
      if (seed->count()) opt.seed = seed_arg;
      if (mode->count()) opt.mode = mode_arg;
      if (concept_opt->count()) opt.concept_name = concept_arg;
      if (out->count()) opt.out_dir = out_arg;
    });
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);
  try {
    auto sc = load_config(opt);
    const std::string cmd = app.get_subcommands().front()->get_name();
    return opt.use_float ? run_command<double>(cmd, sc, opt)
                         : run_command<icps::Rational>(cmd, sc, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
