#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "icps/generate.hpp"
#include "icps/solver.hpp"

using namespace icps;
using th::q;

TEST_CASE("stable sets on the single-pair market") {
  auto m = th::std_market<Rational>();
  TestMenu<Rational> null_only;
  auto bayes = stable_matchings(m, null_only, Concept::Bayes);
  REQUIRE(bayes.stable.size() == 1);
  CHECK(bayes.stable.front().first == th::matching_of({0}));
  CHECK(*bayes.welfare_min == q(9, 4));

  // ex ante, a free perfect test raises the pair's own threshold to 4 above
  // its divisible value 9/4: the set empties under the default standing rule
  TestMenu<Rational> perfect({Test<Rational>::make(q(1), q(0))});
  auto icps = stable_matchings(m, perfect, Concept::Icps);
  CHECK(icps.stable.empty());
  auto lifted = stable_matchings(m, perfect, Concept::Icps, nullptr,
                                 kDefaultEnumerationCap, true);
  CHECK(lifted.stable.size() == 1);

  // realized (H, H): the matched pair covers 4 and is stable
  auto r = th::realized_market<Rational>({1}, {1});
  auto ricps = stable_matchings(r, perfect, Concept::Icps);
  REQUIRE(ricps.stable.size() == 1);
  CHECK(ricps.stable.front().first == th::matching_of({0}));
}

TEST_CASE("distinct-type realized market has the assortative singleton") {
  Market<Rational> m;
  std::vector<TypeGrade<Rational>> fg = {{"f1", q(1)}, {"f2", q(2)}},
                                   wg = {{"w1", q(1)}, {"w2", q(3)}};
  m.surplus = SurplusTable<Rational>::product(fg, wg);
  m.mode = Mode::Realized;
  m.distinct_types = true;
  m.firms = {{"f0", q(1, 2), 1}, {"f1", q(1, 2), 0}};
  m.workers = {{"w0", q(1, 2), 0}, {"w1", q(1, 2), 1}};
  m.validate();
  TestMenu<Rational> menu({Test<Rational>::make(q(9, 10), q(1, 2))});
  auto icps = stable_matchings(m, menu, Concept::Icps);
  REQUIRE(icps.stable.size() == 1);
  CHECK(icps.stable.front().first == assortative_matching(m));
  auto uniq = uniqueness_report(m, menu);
  CHECK(uniq.assumption4_satisfied);  // delta = 1, 0.9 > 0.5
  CHECK(uniq.unique);
  CHECK(uniq.matches_assortative);
}

TEST_CASE("max welfare matching and tie-breaks") {
  auto r = th::realized_market<Rational>({1, 0}, {1, 0});
  CHECK(max_welfare_matching(r) == th::matching_of({0, 1}));
  CHECK(expected_welfare(r, max_welfare_matching(r)) == q(5));
  // common priors ex ante: full matchings tie; identity wins the tie-break
  auto m = th::std_market<Rational>(2, 2);
  CHECK(max_welfare_matching(m) == th::matching_of({0, 1}));
  // a high menu cost makes matching unprofitable
  CHECK(max_welfare_matching(m, q(3)) == Matching(2));
}

TEST_CASE("assortative matching construction") {
  auto r = th::realized_market<Rational>({0, 1}, {1, 0});
  auto a = assortative_matching(r);
  CHECK(a == th::matching_of({1, 0}));  // H firm 1 with H worker 0
  CHECK(is_positively_assortative(r, a));
  // unbalanced: lowest firm stays unmatched
  auto u = th::realized_market<Rational>({1, 0, 1}, {1, 0});
  u.surplus = SurplusTable<Rational>::two_grade(q(4), q(2), q(1));
  auto au = assortative_matching(u);
  CHECK(au.pair_count() == 2);
  CHECK_FALSE(au.matched(1));  // the L-type firm
}

TEST_CASE("refinement magnitude and the inclusion chain") {
  auto m = th::std_market<Rational>(2, 2);
  auto nullmag = refinement_magnitude(m, TestMenu<Rational>());
  CHECK(nullmag.bayes_minus_icps == 0);

  auto r = th::realized_market<Rational>({1, 0}, {1, 0});
  TestMenu<Rational> menu({Test<Rational>::make(q(1), q(0))});
  auto mag = refinement_magnitude(m, menu);
  CHECK(mag.icps_count <= mag.bayes_count);
  CHECK(mag.bayes_count <= mag.ir_count);
  SequentialProtocol<Rational> proto;
  proto.stages = {{q(1, 2), q(1, 10)}, {q(1), q(1, 10)}};
  auto smag = refinement_magnitude(r, TestMenu<Rational>(), &proto);
  REQUIRE(smag.seq_count.has_value());
  CHECK(*smag.seq_count <= smag.endog_count);
}

TEST_CASE("inclusion chain on seeded markets") {
  SeededRng rng(606);
  SequentialProtocol<Rational> proto;
  proto.stages = {{q(1, 2), q(1, 10)}, {q(1), q(1, 10)}};
  for (int i = 0; i < 60; ++i) {
    GenSpec<Rational> spec;
    spec.n_firms = 1 + rng.next(3);
    spec.n_workers = 1 + rng.next(3);
    spec.mode = rng.next(2) ? Mode::Realized : Mode::ExAnte;
    auto m = generate_market<Rational>(12000 + i, spec);
    auto menu = generate_menu<Rational>(12000 + i);
    CHECK_NOTHROW(refinement_magnitude(m, menu, rng.next(2) ? &proto : nullptr));
  }
}

TEST_CASE("lone wolf across the stable set") {
  auto r = th::realized_market<Rational>({1, 0}, {1, 0});
  TestMenu<Rational> menu({Test<Rational>::make(q(1), q(0))});
  auto icps = stable_matchings(r, menu, Concept::Icps);
  REQUIRE_FALSE(icps.stable.empty());
  auto lw = lone_wolf_report(icps);
  CHECK(lw.holds);
  StableSetReport<Rational> empty;
  CHECK_THROWS_AS(lone_wolf_report(empty), EmptyStableSet);
}

TEST_CASE("uniqueness preconditions") {
  auto r = th::realized_market<Rational>({1, 0}, {1, 0});
  CHECK_THROWS_AS(uniqueness_report(r, TestMenu<Rational>()), NoDistinctTypes);
  // two-grade 2x2 with distinct realized values qualifies
  r.distinct_types = true;
  r.validate();
  auto weak = uniqueness_report(r, TestMenu<Rational>());
  CHECK_FALSE(weak.assumption4_satisfied);
  auto strong = uniqueness_report(
      r, TestMenu<Rational>({Test<Rational>::make(q(1), q(0))}));
  CHECK(strong.assumption4_satisfied);
  CHECK(strong.unique);
  CHECK(strong.matches_assortative);
}

TEST_CASE("generated markets are deterministic and well formed") {
  GenSpec<Rational> spec;
  spec.n_firms = 3;
  spec.n_workers = 3;
  spec.mode = Mode::Realized;
  spec.distinct_types = true;
  auto a = generate_market<Rational>(42, spec);
  auto b = generate_market<Rational>(42, spec);
  CHECK(a.surplus.entries == b.surplus.entries);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.firms[i].prior == b.firms[i].prior);
    CHECK(a.firms[i].realized == b.firms[i].realized);
    CHECK(a.workers[i].prior == b.workers[i].prior);
    CHECK(a.workers[i].realized == b.workers[i].realized);
  }
  CHECK_NOTHROW(a.validate());  // distinctness enforced by validate
  for (const auto& agent : a.firms) {
    CHECK(agent.prior > Rational(0));
    CHECK(agent.prior < Rational(1));
  }
}
