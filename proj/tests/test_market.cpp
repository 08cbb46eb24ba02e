#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "icps/generate.hpp"
#include "icps/market.hpp"

using namespace icps;
using th::q;

TEST_CASE("joint distribution cells at p = 1/2") {
  auto half = q(1, 2);
  SUBCASE("independent") {
    auto d = build_joint_distribution<Rational>(half, q(0));
    CHECK(d.hh == q(1, 4));
    CHECK(d.hl == q(1, 4));
    CHECK(d.lh == q(1, 4));
    CHECK(d.ll == q(1, 4));
  }
  SUBCASE("perfect negative association") {
    auto d = build_joint_distribution<Rational>(half, q(-1));
    CHECK(d.hh == q(0));
    CHECK(d.hl == q(1, 2));
    CHECK(d.lh == q(1, 2));
    CHECK(d.ll == q(0));
  }
  SUBCASE("perfect positive association") {
    auto d = build_joint_distribution<Rational>(half, q(1));
    CHECK(d.hh == q(1, 2));
    CHECK(d.hl == q(0));
    CHECK(d.lh == q(0));
    CHECK(d.ll == q(1, 2));
  }
}

TEST_CASE("joint distribution matches the common-p closed form") {
  // HH cell must equal p^2 + rho*p*(1-p) whenever rho*p*(1-p) is feasible.
  for (long pn = 1; pn < 8; ++pn)
    for (long rn = -4; rn <= 4; ++rn) {
      Rational p = q(pn, 8), rho = q(rn, 4);
      Rational g = std::min(p * (1 - p), p * (1 - p));
      try {
        auto d = build_joint_distribution<Rational>(p, rho);
        CHECK(d.hh == p * p + rho * p * (1 - p));
        CHECK(d.hh + d.hl == p);
        CHECK(d.hh + d.lh == p);
        CHECK(d.hh + d.hl + d.lh + d.ll == q(1));
      } catch (const InfeasibleCorrelation&) {
        // only legitimate at sufficiently negative rho, when the closed
        // form drives the HH or LL cell below zero
        CHECK(rho < Rational(0));
        Rational hh = p * p + rho * p * (1 - p);
        Rational ll = (1 - p) * (1 - p) + rho * p * (1 - p);
        CHECK((hh < Rational(0) || ll < Rational(0)));
      }
      (void)g;
    }
}

TEST_CASE("infeasible correlation is rejected") {
  CHECK_THROWS_AS(build_joint_distribution<Rational>(q(1, 4), q(-1, 2)),
                  InfeasibleCorrelation);
  CHECK_THROWS_AS(build_joint_distribution<Rational>(q(1, 2), q(3, 2)),
                  InvalidSpec);
  CHECK_NOTHROW(build_joint_distribution<Rational>(q(1, 4), q(-1, 3)));
}

TEST_CASE("heterogeneous-prior coupling keeps exact marginals") {
  for (long a = 1; a < 6; ++a)
    for (long b = 1; b < 6; ++b)
      for (long rn : {-2L, 0L, 1L, 2L}) {
        Rational pf = q(a, 6), pw = q(b, 6), rho = q(rn, 2);
        try {
          auto d = build_pair_joint<Rational>(pf, pw, rho);
          CHECK(d.hh + d.hl == pf);
          CHECK(d.hh + d.lh == pw);
          CHECK(d.hh + d.hl + d.lh + d.ll == q(1));
        } catch (const InfeasibleCorrelation&) {
          CHECK(rho < Rational(0));
        }
      }
}

TEST_CASE("pair surplus distribution, standard setup") {
  auto d = th::std_dist<Rational>();
  REQUIRE(d.atoms.size() == 3);
  CHECK(d.atoms[0] == std::pair<Rational, Rational>{q(1), q(1, 4)});
  CHECK(d.atoms[1] == std::pair<Rational, Rational>{q(2), q(1, 2)});
  CHECK(d.atoms[2] == std::pair<Rational, Rational>{q(4), q(1, 4)});
  CHECK(d.mean == q(9, 4));
}

TEST_CASE("pair surplus distribution, realized and correlated cases") {
  auto m = th::realized_market<Rational>({1}, {0});
  auto d = pair_surplus_distribution(m, 0, 0);
  REQUIRE(d.atoms.size() == 1);
  CHECK(d.atoms[0] == std::pair<Rational, Rational>{q(2), q(1)});
  CHECK(d.mean == q(2));

  auto anti = th::std_market<Rational>();
  anti.rho = q(-1);
  auto d2 = pair_surplus_distribution(anti, 0, 0);
  REQUIRE(d2.atoms.size() == 1);
  CHECK(d2.atoms[0] == std::pair<Rational, Rational>{q(2), q(1)});
  CHECK(d2.mean == q(2));
}

TEST_CASE("expected surplus equals the quadratic closed form") {
  SeededRng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    Rational p = q(rng.range(1, 15), 16);
    Rational gamma = q(rng.range(0, 5));
    Rational beta = gamma + q(rng.range(1, 5));
    Rational alpha = beta + q(rng.range(1, 5));
    Market<Rational> m;
    m.surplus = SurplusTable<Rational>::two_grade(alpha, beta, gamma);
    m.firms.push_back({"f", p, std::nullopt});
    m.workers.push_back({"w", p, std::nullopt});
    auto d = pair_surplus_distribution(m, 0, 0);
    CHECK(d.mean ==
          p * p * alpha + 2 * p * (1 - p) * beta + (1 - p) * (1 - p) * gamma);
  }
}

TEST_CASE("expected surplus degenerate cases") {
  PairSurplusDistribution<Rational> point =
      PairSurplusDistribution<Rational>::from_atoms({{q(4), q(1)}});
  CHECK(point.mean == q(4));
  // priors approaching 1 push the mean to alpha
  Market<Rational> m;
  m.surplus = th::std_table<Rational>();
  m.firms.push_back({"f", q(999, 1000), std::nullopt});
  m.workers.push_back({"w", q(999, 1000), std::nullopt});
  auto d = pair_surplus_distribution(m, 0, 0);
  CHECK(d.mean > q(39, 10));
}

TEST_CASE("test power over grade quadruples") {
  CHECK(test_power_delta(th::std_table<Rational>()) == q(1));
  CHECK(test_power_delta(SurplusTable<Rational>::two_grade(q(10), q(3), q(2))) ==
        q(1));
  SurplusTable<Rational> bad;
  bad.firm_grades = {{"L", q(0)}, {"H", q(1)}};
  bad.worker_grades = {{"L", q(0)}, {"H", q(1)}};
  bad.entries = {{q(1), q(4)}, {q(4), q(4)}};  // alpha == beta
  CHECK_THROWS_AS(bad.validate(), InvalidSpec);
  // strictly monotone tables always have positive power
  SeededRng rng(7);
  for (int i = 0; i < 50; ++i) {
    Rational gamma = q(rng.range(0, 3));
    Rational beta = gamma + q(rng.range(1, 4));
    Rational alpha = beta + q(rng.range(1, 4));
    CHECK(test_power_delta(
              SurplusTable<Rational>::two_grade(alpha, beta, gamma)) >
          Rational(0));
  }
}

TEST_CASE("expected welfare") {
  auto m = th::std_market<Rational>(2, 2);
  CHECK(expected_welfare(m, Matching(2)) == q(0));
  CHECK(expected_welfare(m, th::matching_of({0, 1})) == q(9, 2));
  CHECK(expected_welfare(m, th::matching_of({0, 1}), q(1, 4)) == q(4));
  auto r = th::realized_market<Rational>({1, 0}, {1, 0});
  CHECK(expected_welfare(r, th::matching_of({0, 1})) == q(5));
}

TEST_CASE("matching enumeration counts") {
  CHECK(enumerate_matchings(th::std_market<Rational>(1, 1)).size() == 2);
  CHECK(enumerate_matchings(th::std_market<Rational>(2, 2)).size() == 7);
  CHECK(enumerate_matchings(th::std_market<Rational>(3, 3)).size() == 34);
  CHECK(enumerate_matchings(th::std_market<Rational>(4, 4)).size() == 209);
  CHECK(enumerate_matchings(th::std_market<Rational>(2, 3)).size() == 13);
  CHECK(enumerate_matchings(th::std_market<Rational>(3, 1)).size() == 4);
  CHECK_THROWS_AS(enumerate_matchings(th::std_market<Rational>(7, 1)),
                  SizeCapExceeded);
}

TEST_CASE("matching enumeration closed form up to 4x4") {
  auto choose = [](std::size_t n, std::size_t k) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
  };
  for (std::size_t nf = 1; nf <= 4; ++nf)
    for (std::size_t nw = 1; nw <= 4; ++nw) {
      std::size_t expect = 0, fact = 1;
      for (std::size_t k = 0; k <= std::min(nf, nw); ++k) {
        if (k) fact *= k;
        expect += choose(nf, k) * choose(nw, k) * fact;
      }
      CHECK(enumerate_matchings(th::std_market<Rational>(nf, nw)).size() ==
            expect);
    }
}

TEST_CASE("assortativity predicate") {
  auto r = th::realized_market<Rational>({1, 0}, {1, 0});
  CHECK(is_positively_assortative(r, th::matching_of({0, 1})));
  CHECK_FALSE(is_positively_assortative(r, th::matching_of({1, 0})));
  CHECK(is_positively_assortative(r, th::matching_of({0, Matching::kUnmatched})));
  // no realized types and tied priors: no sort key
  auto tied = th::std_market<Rational>(2, 2);
  CHECK_THROWS_AS(is_positively_assortative(tied, th::matching_of({0, 1})),
                  NoSortKey);
  // distinct priors serve as the ex-ante key
  auto m = th::std_market<Rational>(2, 2);
  m.firms[0].prior = q(3, 4);
  m.workers[0].prior = q(3, 4);
  CHECK(is_positively_assortative(m, th::matching_of({0, 1})));
  CHECK_FALSE(is_positively_assortative(m, th::matching_of({1, 0})));
}

TEST_CASE("market validation") {
  auto m = th::std_market<Rational>();
  m.firms[0].prior = q(1);
  CHECK_THROWS_AS(m.validate(), InvalidSpec);
  auto r = th::std_market<Rational>();
  r.mode = Mode::Realized;
  CHECK_THROWS_AS(r.validate(), MissingRealizedTypes);
}
