#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "support.hpp"
#include "tvdist/errors.hpp"
#include "tvdist/oracle.hpp"

using namespace tvdist;

TEST_CASE("exact_tv basics") {
  ProductDistribution u({Rational(1, 2), Rational(1, 2)});
  CHECK(oracle::exact_tv(TvInstance(u, u)) == 0);

  TvInstance point(ProductDistribution({Rational(1)}), ProductDistribution({Rational(1, 2)}));
  CHECK(oracle::exact_tv(point) == Rational(1, 2));

  TvInstance pair(ProductDistribution({Rational(3, 4), Rational(3, 4)}),
                  ProductDistribution({Rational(1, 2), Rational(1, 2)}));
  CHECK(oracle::exact_tv(pair) == Rational(5, 16));
}

TEST_CASE("exact_tv equals half the l1 distance and is symmetric") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t n = 1 + rng.below(9);
    TvInstance inst = testsupport::random_halfcase(rng, n);
    Rational a = oracle::exact_tv(inst);
    Rational b = oracle::exact_tv_half_l1(inst);
    CHECK(a == b);
    TvInstance swapped(inst.q, inst.p);
    CHECK(oracle::exact_tv(swapped) == a);
  }
}

TEST_CASE("exact_tv cap") {
  std::vector<Rational> pm(25, Rational(3, 4));
  std::vector<Rational> qm(25, Rational(1, 2));
  TvInstance big{ProductDistribution(pm), ProductDistribution(qm)};
  CHECK_THROWS_AS(oracle::exact_tv(big), CapExceeded);
}

TEST_CASE("count_pmf_equals") {
  ProductDistribution u({Rational(1, 2), Rational(1, 2)});
  CHECK(oracle::count_pmf_equals(u, Rational(1, 4)) == 4);

  ProductDistribution single({Rational(3, 4)});
  CHECK(oracle::count_pmf_equals(single, Rational(1, 4)) == 1);

  ProductDistribution two({Rational(2, 3), Rational(4, 5)});
  CHECK(oracle::count_pmf_equals(two, Rational(8, 15)) == 1);
  CHECK(oracle::count_pmf_equals(two, Rational(7, 15)) == 0);
}

TEST_CASE("count_subset_sum") {
  CHECK(oracle::count_subset_sum({{1, 2}, 3}) == 1);
  CHECK(oracle::count_subset_sum({{1, 1, 1}, 2}) == 3);
  CHECK(oracle::count_subset_sum({{1, 2, 3}, 3}) == 2);
  CHECK(oracle::count_subset_sum({{0}, 0}) == 2);  // both subsets hit 0
  CHECK(oracle::count_subset_sum({{-2, 5}, 3}) == 1);
}

TEST_CASE("two-term enumeration basics") {
  // A + B > 1 with monotone weights: nothing satisfies, not even the empty set
  TwoTermConstraint none;
  none.A = 0.7;
  none.B = 0.4;
  none.x = {0.1, 0.2};
  none.y = {0.0, 0.0};
  CHECK(oracle::enumerate_twoterm_solutions(none).members.empty());

  TwoTermConstraint all;
  all.A = 0.0;
  all.B = 0.0;
  all.x = {0.5, 0.25, 1.0};
  all.y = {0.0, 0.0, 0.0};
  CHECK(oracle::enumerate_twoterm_solutions(all).members.size() == 8);

  // direct hand evaluation of the four subsets
  TwoTermConstraint c;
  c.A = 0.2;
  c.B = 0.2;
  c.x = {0.1, 0.5};
  c.y = {0.0, 0.0};
  auto sols = oracle::enumerate_twoterm_solutions(c);
  std::set<std::vector<std::size_t>> got(sols.members.begin(), sols.members.end());
  std::set<std::vector<std::size_t>> expect;
  // {}: 0.4 <= 1; {0}: 0.4 e^{0.1} = 0.442; {1}: 0.4 e^{0.5} = 0.659;
  // {0,1}: 0.4 e^{0.6} = 0.729 -- all in
  expect.insert(std::vector<std::size_t>{});
  expect.insert({0});
  expect.insert({1});
  expect.insert({0, 1});
  CHECK(got == expect);
}

TEST_CASE("two-term family is downward closed") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 1 + rng.below(10);
    TwoTermConstraint c;
    c.A = rng.uniform01() * 0.6;
    c.B = rng.uniform01() * 0.6;
    for (std::size_t i = 0; i < n; ++i) {
      double x = rng.uniform01();
      double z = rng.uniform01() * 2.0;
      c.x.push_back(x);
      c.y.push_back(z - x);
    }
    auto sols = oracle::enumerate_twoterm_solutions(c, 12);
    std::set<std::vector<std::size_t>> in(sols.members.begin(), sols.members.end());
    for (const auto& s : sols.members) {
      for (std::size_t drop = 0; drop < s.size(); ++drop) {
        std::vector<std::size_t> sub;
        for (std::size_t i = 0; i < s.size(); ++i)
          if (i != drop) sub.push_back(s[i]);
        CHECK(in.count(sub) == 1);
      }
    }
  }
}

TEST_CASE("two-term enumeration cap and validation") {
  TwoTermConstraint big;
  big.x.assign(22, 0.1);
  big.y.assign(22, 0.0);
  CHECK_THROWS_AS(oracle::enumerate_twoterm_solutions(big), CapExceeded);

  TwoTermConstraint bad;
  bad.x = {-0.5};
  bad.y = {0.0};
  CHECK_THROWS_AS(oracle::enumerate_twoterm_solutions(bad), std::invalid_argument);
}
