#ifndef ICPS_CONFIG_HPP
#define ICPS_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "icps/errors.hpp"
#include "icps/generate.hpp"
#include "icps/information.hpp"
#include "icps/market.hpp"
#include "icps/numeric.hpp"
#include "icps/stability.hpp"

namespace icps {

using Json = nlohmann::json;

namespace cfg {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed,
                       const std::string& context) {
  if (!obj.is_object()) throw InvalidSpec(context + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw InvalidSpec(context + ": unknown key '" + it.key() + "'");
}

// Numbers may be JSON numbers or strings like "1/3" / "0.125"; both parse to
// exact rationals.
inline Rational rational_of(const Json& v, const std::string& context) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long>());
  if (v.is_number_float()) return rational_from_double(v.get<double>());
  throw InvalidSpec(context + ": expected a number or rational string");
}

inline TypeGrade<Rational> grade_of(const Json& v, const std::string& ctx) {
  check_keys(v, {"label", "value"}, ctx);
  return {v.at("label").get<std::string>(),
          rational_of(v.at("value"), ctx + ".value")};
}

inline SurplusTable<Rational> surplus_of(const Json& v) {
  if (v.contains("alpha")) {
    check_keys(v, {"alpha", "beta", "gamma"}, "surplus");
    return SurplusTable<Rational>::two_grade(
        rational_of(v.at("alpha"), "surplus.alpha"),
        rational_of(v.at("beta"), "surplus.beta"),
        rational_of(v.at("gamma"), "surplus.gamma"));
  }
  check_keys(v, {"form", "firm_grades", "worker_grades", "entries"}, "surplus");
  std::vector<TypeGrade<Rational>> fg, wg;
  for (const auto& g : v.at("firm_grades"))
    fg.push_back(grade_of(g, "surplus.firm_grades[]"));
  for (const auto& g : v.at("worker_grades"))
    wg.push_back(grade_of(g, "surplus.worker_grades[]"));
  std::string form = v.value("form", std::string("table"));
  if (form == "product") {
    if (v.contains("entries"))
      throw InvalidSpec("surplus: product form takes no entries");
    return SurplusTable<Rational>::product(std::move(fg), std::move(wg));
  }
  if (form != "table") throw InvalidSpec("surplus.form must be table|product");
  SurplusTable<Rational> t;
  t.firm_grades = std::move(fg);
  t.worker_grades = std::move(wg);
  for (const auto& row : v.at("entries")) {
    t.entries.emplace_back();
    for (const auto& cell : row)
      t.entries.back().push_back(rational_of(cell, "surplus.entries[][]"));
  }
  t.validate();
  return t;
}

inline std::size_t grade_index(const SurplusTable<Rational>& table,
                               const std::string& label, bool firm_side) {
  const auto& grades = firm_side ? table.firm_grades : table.worker_grades;
  for (std::size_t i = 0; i < grades.size(); ++i)
    if (grades[i].label == label) return i;
  throw InvalidSpec("unknown grade label '" + label + "'");
}

inline Agent<Rational> agent_of(const Json& v, const SurplusTable<Rational>& t,
                                bool firm_side, const std::string& ctx) {
  check_keys(v, {"name", "prior", "type"}, ctx);
  Agent<Rational> a;
  a.name = v.at("name").get<std::string>();
  a.prior = rational_of(v.at("prior"), ctx + ".prior");
  if (v.contains("type"))
    a.realized = grade_index(t, v.at("type").get<std::string>(), firm_side);
  return a;
}

inline Mode mode_of(const std::string& s) {
  if (s == "ex-ante") return Mode::ExAnte;
  if (s == "realized") return Mode::Realized;
  throw InvalidSpec("mode must be 'ex-ante' or 'realized'");
}

inline Concept concept_of(const std::string& s) {
  if (s == "bayes") return Concept::Bayes;
  if (s == "icps") return Concept::Icps;
  if (s == "endog") return Concept::Endog;
  if (s == "seq") return Concept::Seq;
  if (s == "ntu") return Concept::Ntu;
  throw InvalidSpec("unknown concept '" + s + "'");
}

inline Test<Rational> test_of(const Json& v, const std::string& ctx) {
  check_keys(v, {"pi", "cost"}, ctx);
  Rational pi = rational_of(v.at("pi"), ctx + ".pi");
  if (v.at("cost").is_string() && v.at("cost").get<std::string>() == "inf")
    return Test<Rational>::infeasible(pi);
  return Test<Rational>::make(pi, rational_of(v.at("cost"), ctx + ".cost"));
}

inline SequentialProtocol<Rational> protocol_of(const Json& v) {
  SequentialProtocol<Rational> p;
  for (const auto& stage : v) {
    check_keys(stage, {"pi", "cost"}, "protocol[]");
    p.stages.emplace_back(rational_of(stage.at("pi"), "protocol[].pi"),
                          rational_of(stage.at("cost"), "protocol[].cost"));
  }
  p.validate();
  return p;
}

}  // namespace cfg

struct SweepSpec {
  std::vector<Rational> p_values;
  std::vector<Rational> rho_values;
  std::vector<Rational> pi_values;
  std::vector<Rational> cost_values;
  std::size_t n_firms = 2;
  std::size_t n_workers = 2;
};

struct SurfaceSpec {
  std::vector<Rational> p_values;
  Rational rho = 0;
  std::size_t resolution = 101;
  std::optional<Rational> pi_lo, pi_hi;  // status-quo range, default [0, maxS]
};

struct AllocationSpec {
  std::vector<int> matching;  // worker index per firm, -1 unmatched
  std::vector<Rational> firm_pay;
  std::vector<Rational> worker_pay;
};

struct ProtocolOverride {
  std::size_t firm, worker;
  SequentialProtocol<Rational> protocol;
};

struct ScenarioConfig {
  std::optional<Market<Rational>> market;
  std::optional<GenSpec<Rational>> generate;
  TestMenu<Rational> menu;
  std::optional<SequentialProtocol<Rational>> protocol;
  std::vector<ProtocolOverride> protocol_overrides;
  std::optional<NtuUtilityTable<Rational>> ntu;
  std::optional<AllocationSpec> allocation;
  std::vector<Concept> concepts{Concept::Bayes, Concept::Icps};
  std::optional<std::uint64_t> seed;
  bool tested_standing = false;
  std::optional<SweepSpec> sweep;
  std::optional<SurfaceSpec> surface;
};

inline ScenarioConfig parse_scenario(const Json& doc) {
  cfg::check_keys(doc,
                  {"mode", "rho", "surplus", "firms", "workers",
                   "distinct_types", "menu", "protocol", "protocol_overrides",
                   "ntu", "allocation", "concepts", "seed", "generate",
                   "sweep", "surface", "tested_standing_matches"},
                  "config");
  ScenarioConfig out;
  if (doc.contains("seed")) out.seed = doc.at("seed").get<std::uint64_t>();
  out.tested_standing = doc.value("tested_standing_matches", false);
  if (doc.contains("generate")) {
    const auto& g = doc.at("generate");
    cfg::check_keys(g,
                    {"n_firms", "n_workers", "mode", "distinct_types", "rho",
                     "prior_denominator", "surplus_scale"},
                    "generate");
    GenSpec<Rational> spec;
    spec.n_firms = g.value("n_firms", 2u);
    spec.n_workers = g.value("n_workers", 2u);
    spec.mode = cfg::mode_of(g.value("mode", std::string("ex-ante")));
    spec.distinct_types = g.value("distinct_types", false);
    if (g.contains("rho")) spec.rho = cfg::rational_of(g.at("rho"), "generate.rho");
    spec.prior_denominator = g.value("prior_denominator", 16u);
    spec.surplus_scale = g.value("surplus_scale", 4L);
    if (!out.seed) throw InvalidSpec("generate requires a seed");
    out.generate = spec;
  } else if (doc.contains("surplus")) {
    Market<Rational> m;
    m.surplus = cfg::surplus_of(doc.at("surplus"));
    m.mode = cfg::mode_of(doc.value("mode", std::string("ex-ante")));
    if (doc.contains("rho")) m.rho = cfg::rational_of(doc.at("rho"), "rho");
    m.distinct_types = doc.value("distinct_types", false);
    for (const auto& a : doc.value("firms", Json::array()))
      m.firms.push_back(cfg::agent_of(a, m.surplus, true, "firms[]"));
    for (const auto& a : doc.value("workers", Json::array()))
      m.workers.push_back(cfg::agent_of(a, m.surplus, false, "workers[]"));
    m.validate();
    out.market = std::move(m);
  }
  if (doc.contains("menu")) {
    std::vector<Test<Rational>> tests;
    for (const auto& t : doc.at("menu"))
      tests.push_back(cfg::test_of(t, "menu[]"));
    out.menu = TestMenu<Rational>(std::move(tests));
  }
  if (doc.contains("protocol"))
    out.protocol = cfg::protocol_of(doc.at("protocol"));
  if (doc.contains("protocol_overrides")) {
    for (const auto& o : doc.at("protocol_overrides")) {
      cfg::check_keys(o, {"firm", "worker", "protocol"},
                      "protocol_overrides[]");
      out.protocol_overrides.push_back(
          {o.at("firm").get<std::size_t>(), o.at("worker").get<std::size_t>(),
           cfg::protocol_of(o.at("protocol"))});
    }
  }
  if (doc.contains("ntu")) {
    const auto& n = doc.at("ntu");
    cfg::check_keys(n, {"firm_util", "worker_util", "firm_cost_share"}, "ntu");
    NtuUtilityTable<Rational> t;
    auto read = [&](const Json& rows, std::vector<std::vector<Rational>>& dst,
                    const std::string& ctx) {
      for (const auto& row : rows) {
        dst.emplace_back();
        for (const auto& cell : row)
          dst.back().push_back(cfg::rational_of(cell, ctx));
      }
    };
    read(n.at("firm_util"), t.firm_util, "ntu.firm_util");
    read(n.at("worker_util"), t.worker_util, "ntu.worker_util");
    if (n.contains("firm_cost_share"))
      t.firm_cost_share =
          cfg::rational_of(n.at("firm_cost_share"), "ntu.firm_cost_share");
    out.ntu = std::move(t);
  }
  if (doc.contains("allocation")) {
    const auto& a = doc.at("allocation");
    cfg::check_keys(a, {"matching", "firm_pay", "worker_pay"}, "allocation");
    AllocationSpec spec;
    for (const auto& w : a.at("matching")) spec.matching.push_back(w.get<int>());
    for (const auto& x : a.at("firm_pay"))
      spec.firm_pay.push_back(cfg::rational_of(x, "allocation.firm_pay"));
    for (const auto& x : a.at("worker_pay"))
      spec.worker_pay.push_back(cfg::rational_of(x, "allocation.worker_pay"));
    out.allocation = std::move(spec);
  }
  if (doc.contains("concepts")) {
    out.concepts.clear();
    for (const auto& c : doc.at("concepts"))
      out.concepts.push_back(cfg::concept_of(c.get<std::string>()));
  }
  if (doc.contains("sweep")) {
    const auto& s = doc.at("sweep");
    cfg::check_keys(s, {"p", "rho", "pi", "cost", "n_firms", "n_workers"},
                    "sweep");
    SweepSpec spec;
    auto read = [&](const char* key, std::vector<Rational>& dst,
                    Rational fallback) {
      if (!s.contains(key)) {
        dst.push_back(fallback);
        return;
      }
      for (const auto& x : s.at(key))
        dst.push_back(cfg::rational_of(x, std::string("sweep.") + key));
    };
    read("p", spec.p_values, Rational(1, 2));
    read("rho", spec.rho_values, Rational(0));
    read("pi", spec.pi_values, Rational(1));
    read("cost", spec.cost_values, Rational(0));
    spec.n_firms = s.value("n_firms", 2u);
    spec.n_workers = s.value("n_workers", 2u);
    out.sweep = std::move(spec);
  }
  if (doc.contains("surface")) {
    const auto& s = doc.at("surface");
    cfg::check_keys(s, {"p", "rho", "resolution", "pi_min", "pi_max"},
                    "surface");
    SurfaceSpec spec;
    for (const auto& x : s.at("p"))
      spec.p_values.push_back(cfg::rational_of(x, "surface.p"));
    if (s.contains("rho"))
      spec.rho = cfg::rational_of(s.at("rho"), "surface.rho");
    spec.resolution = s.value("resolution", 101u);
    if (spec.resolution < 2) throw InvalidSpec("surface.resolution must be >= 2");
    if (s.contains("pi_min"))
      spec.pi_lo = cfg::rational_of(s.at("pi_min"), "surface.pi_min");
    if (s.contains("pi_max"))
      spec.pi_hi = cfg::rational_of(s.at("pi_max"), "surface.pi_max");
    out.surface = std::move(spec);
  }
  if (!out.market && !out.generate && !out.surface)
    throw InvalidSpec("config needs a market, a generate block, or a surface block");
  return out;
}

// Scalar conversion from the exact parsed form into the working mode.
template <class S>
S conv(const Rational& q) {
  return NumTraits<S>::from_rational(q);
}

template <class S>
SurplusTable<S> to_scalar(const SurplusTable<Rational>& t) {
  SurplusTable<S> out;
  for (const auto& g : t.firm_grades)
    out.firm_grades.push_back({g.label, conv<S>(g.value)});
  for (const auto& g : t.worker_grades)
    out.worker_grades.push_back({g.label, conv<S>(g.value)});
  for (const auto& row : t.entries) {
    out.entries.emplace_back();
    for (const auto& cell : row) out.entries.back().push_back(conv<S>(cell));
  }
  return out;
}

template <class S>
Market<S> to_scalar(const Market<Rational>& m) {
  Market<S> out;
  out.surplus = to_scalar<S>(m.surplus);
  out.rho = conv<S>(m.rho);
  out.mode = m.mode;
  out.distinct_types = m.distinct_types;
  for (const auto& a : m.firms)
    out.firms.push_back({a.name, conv<S>(a.prior), a.realized});
  for (const auto& a : m.workers)
    out.workers.push_back({a.name, conv<S>(a.prior), a.realized});
  return out;
}

template <class S>
TestMenu<S> to_scalar(const TestMenu<Rational>& menu) {
  std::vector<Test<S>> tests;
  for (const auto& t : menu.tests) {
    if (t.feasible())
      tests.push_back(Test<S>::make(conv<S>(t.pi), conv<S>(*t.cost)));
    else
      tests.push_back(Test<S>::infeasible(conv<S>(t.pi)));
  }
  return TestMenu<S>(std::move(tests));
}

template <class S>
SequentialProtocol<S> to_scalar(const SequentialProtocol<Rational>& p) {
  SequentialProtocol<S> out;
  for (const auto& [pi, c] : p.stages)
    out.stages.emplace_back(conv<S>(pi), conv<S>(c));
  return out;
}

template <class S>
NtuUtilityTable<S> to_scalar(const NtuUtilityTable<Rational>& t) {
  NtuUtilityTable<S> out;
  out.firm_cost_share = conv<S>(t.firm_cost_share);
  auto copy = [](const std::vector<std::vector<Rational>>& src,
                 std::vector<std::vector<S>>& dst) {
    for (const auto& row : src) {
      dst.emplace_back();
      for (const auto& cell : row) dst.back().push_back(conv<S>(cell));
    }
  };
  copy(t.firm_util, out.firm_util);
  copy(t.worker_util, out.worker_util);
  return out;
}

template <class S>
GenSpec<S> to_scalar(const GenSpec<Rational>& g) {
  GenSpec<S> out;
  out.n_firms = g.n_firms;
  out.n_workers = g.n_workers;
  out.mode = g.mode;
  out.distinct_types = g.distinct_types;
  out.rho = conv<S>(g.rho);
  out.prior_denominator = g.prior_denominator;
  out.surplus_scale = g.surplus_scale;
  return out;
}

template <class S>
Allocation<S> to_scalar(const AllocationSpec& a) {
  Allocation<S> out;
  out.matching.worker_of_firm = a.matching;
  for (const auto& x : a.firm_pay) out.firm_pay.push_back(conv<S>(x));
  for (const auto& x : a.worker_pay) out.worker_pay.push_back(conv<S>(x));
  return out;
}

// The scenario's market in the working scalar type, generated when needed.
template <class S>
Market<S> scenario_market(const ScenarioConfig& config) {
  if (config.market) return to_scalar<S>(*config.market);
  if (config.generate)
    return generate_market<S>(*config.seed, to_scalar<S>(*config.generate));
  throw InvalidSpec("scenario has no market");
}

}  // namespace icps

#endif  // ICPS_CONFIG_HPP
