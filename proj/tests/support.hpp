#ifndef TVDIST_TESTS_SUPPORT_HPP
#define TVDIST_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "tvdist/instances.hpp"
#include "tvdist/rng.hpp"
#include "tvdist/twoterm.hpp"

namespace testsupport {

using tvdist::Rational;
using tvdist::Rng;

// Half-case instance generator used across the suites:
// p_i uniform on {16/32, ..., 30/32}, q_i uniform on {1/64, ..., 64 p_i / 64}.
inline tvdist::TvInstance random_halfcase(Rng& rng, std::size_t n) {
  std::vector<Rational> p, q;
  for (std::size_t i = 0; i < n; ++i) {
    long pk = 16 + static_cast<long>(rng.below(15));
    Rational pi(pk, 32);
    long qmax = 2 * pk;  // q <= p over denominator 64
    long qk = 1 + static_cast<long>(rng.below(static_cast<std::uint64_t>(qmax)));
    q.push_back(Rational(qk, 64));
    p.push_back(pi);
  }
  return tvdist::TvInstance(tvdist::ProductDistribution(p), tvdist::ProductDistribution(q));
}

// Exhaustive subset check of the original two-term constraint in long double
// (independent of the engine's evaluation).
inline bool subset_satisfies(const tvdist::TwoTermConstraint& c, std::uint64_t mask,
                             double band = tvdist::kGuardBand) {
  long double sx = 0.0L, sz = 0.0L;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (mask >> i & 1) {
      sx += c.x[i];
      sz += c.x[i] + c.y[i];
    }
  }
  long double lhs = static_cast<long double>(c.A) * std::exp(sx) +
                    static_cast<long double>(c.B) * std::exp(sz);
  return lhs <= 1.0L + static_cast<long double>(band);
}

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
inline double gamma_p(double a, double x) {
  if (x <= 0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  double b = x + 1.0 - a, cc = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    cc = b + an / cc;
    if (std::fabs(cc) < 1e-300) cc = 1e-300;
    d = 1.0 / d;
    double del = d * cc;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

// Upper tail of the chi-squared distribution with k degrees of freedom.
inline double chi2_sf(double stat, double dof) { return 1.0 - gamma_p(dof / 2.0, stat / 2.0); }

}  // namespace testsupport

#endif
