#ifndef TVDIST_ORACLE_HPP
#define TVDIST_ORACLE_HPP

#include <cstdint>
#include <vector>

#include "tvdist/instances.hpp"
#include "tvdist/rational.hpp"
#include "tvdist/twoterm.hpp"

namespace tvdist::oracle {

inline constexpr std::size_t kDefaultCap = 24;
inline constexpr std::size_t kDefaultTwoTermCap = 20;

struct SubsetSumInstance {
  std::vector<long long> weights;
  long long target = 0;
};

// Exact sum_x max(0, P(x) - Q(x)) by full enumeration. Throws CapExceeded
// for n > cap.
Rational exact_tv(const TvInstance& inst, std::size_t cap = kDefaultCap);

// Exact (1/2) sum_x |P(x) - Q(x)|; equals exact_tv, computed independently.
Rational exact_tv_half_l1(const TvInstance& inst, std::size_t cap = kDefaultCap);

// Exact |{x : P(x) = v}|.
BigInt count_pmf_equals(const ProductDistribution& d, const Rational& v,
                        std::size_t cap = kDefaultCap);

// Exact number of subsets summing to the target.
BigInt count_subset_sum(const SubsetSumInstance& inst, std::size_t cap = kDefaultCap);

struct TwoTermSolutions {
  // Sorted index sets, lexicographic enumeration order.
  std::vector<std::vector<std::size_t>> members;
  // Sets whose evaluation fell inside the float guard band (knife edges);
  // always empty when the constraint carries its exact form.
  std::vector<std::vector<std::size_t>> band;
};

// Direct 2^n evaluation of the two-term family, independent of the
// discretization engine.
TwoTermSolutions enumerate_twoterm_solutions(const TwoTermConstraint& c,
                                             std::size_t cap = kDefaultTwoTermCap,
                                             double band = kGuardBand);

}  // namespace tvdist::oracle

#endif
