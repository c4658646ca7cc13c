#include "tvdist/oracle.hpp"

#include <cmath>
#include <sstream>

#include "tvdist/errors.hpp"

namespace tvdist::oracle {

namespace {

void check_cap(std::size_t n, std::size_t cap, const char* what) {
  if (n > cap) {
    std::ostringstream os;
    os << what << ": n = " << n << " exceeds enumeration cap " << cap;
    throw CapExceeded(os.str());
  }
}

// Depth-first enumeration with running products; leaf(P, Q) sees the exact
// masses of each x in {0,1}^n.
template <typename Leaf>
void walk_products(const TvInstance& inst, std::size_t i, Rational& pacc, Rational& qacc,
                   Leaf&& leaf) {
  if (i == inst.size()) {
    leaf(pacc, qacc);
    return;
  }
  Rational p0 = pacc * (Rational(1) - inst.p[i]);
  Rational q0 = qacc * (Rational(1) - inst.q[i]);
  walk_products(inst, i + 1, p0, q0, leaf);
  Rational p1 = pacc * inst.p[i];
  Rational q1 = qacc * inst.q[i];
  walk_products(inst, i + 1, p1, q1, leaf);
}

}  // namespace

Rational exact_tv(const TvInstance& inst, std::size_t cap) {
  check_cap(inst.size(), cap, "exact_tv");
  Rational total(0), pacc(1), qacc(1);
  walk_products(inst, 0, pacc, qacc, [&](const Rational& p, const Rational& q) {
    if (p > q) total += p - q;
  });
  total.canonicalize();
  return total;
}

Rational exact_tv_half_l1(const TvInstance& inst, std::size_t cap) {
  check_cap(inst.size(), cap, "exact_tv_half_l1");
  Rational total(0), pacc(1), qacc(1);
  walk_products(inst, 0, pacc, qacc, [&](const Rational& p, const Rational& q) {
    total += p > q ? p - q : q - p;
  });
  total /= 2;
  total.canonicalize();
  return total;
}

namespace {

void walk_single(const ProductDistribution& d, std::size_t i, Rational& acc, BigInt& count,
                 const Rational& v) {
  if (i == d.size()) {
    if (acc == v) ++count;
    return;
  }
  Rational a0 = acc * (Rational(1) - d[i]);
  walk_single(d, i + 1, a0, count, v);
  Rational a1 = acc * d[i];
  walk_single(d, i + 1, a1, count, v);
}

}  // namespace

BigInt count_pmf_equals(const ProductDistribution& d, const Rational& v, std::size_t cap) {
  check_cap(d.size(), cap, "count_pmf_equals");
  BigInt count = 0;
  Rational acc(1);
  walk_single(d, 0, acc, count, v);
  return count;
}

BigInt count_subset_sum(const SubsetSumInstance& inst, std::size_t cap) {
  if (inst.weights.empty()) throw std::invalid_argument("count_subset_sum: empty instance");
  check_cap(inst.weights.size(), cap, "count_subset_sum");
  const std::size_t n = inst.weights.size();
  BigInt count = 0;
  std::vector<long long> sums;
  sums.reserve(std::size_t{1} << n);
  sums.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t sz = sums.size();
    for (std::size_t k = 0; k < sz; ++k) sums.push_back(sums[k] + inst.weights[i]);
  }
  for (long long s : sums)
    if (s == inst.target) ++count;
  return count;
}

TwoTermSolutions enumerate_twoterm_solutions(const TwoTermConstraint& c, std::size_t cap,
                                             double band) {
  c.validate();
  check_cap(c.size(), cap, "enumerate_twoterm_solutions");
  const std::size_t n = c.size();
  const std::vector<double> z = c.z();

  TwoTermSolutions out;
  std::vector<std::size_t> set;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    set.clear();
    long double sx = 0.0L, sz = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) {
        set.push_back(i);
        sx += c.x[i];
        sz += z[i];
      }
    }
    long double lhs = static_cast<long double>(c.A) * std::exp(sx) +
                      static_cast<long double>(c.B) * std::exp(sz);
    bool in_band = std::fabs(static_cast<double>(lhs) - 1.0) <= band;
    bool in = lhs <= 1.0L + static_cast<long double>(band);
    if (c.exact) {
      Rational lhs_q = c.exact->A;
      Rational second = c.exact->B;
      for (std::size_t i : set) {
        lhs_q *= c.exact->wx[i];
        second *= c.exact->wz[i];
      }
      lhs_q += second;
      in = lhs_q <= 1;
      in_band = false;
    }
    if (in) out.members.push_back(set);
    if (in_band) out.band.push_back(set);
  }
  return out;
}

}  // namespace tvdist::oracle
