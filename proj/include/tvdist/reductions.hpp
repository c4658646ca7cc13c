#ifndef TVDIST_REDUCTIONS_HPP
#define TVDIST_REDUCTIONS_HPP

#include <cstdint>
#include <vector>

#include "tvdist/instances.hpp"
#include "tvdist/oracle.hpp"
#include "tvdist/rational.hpp"

namespace tvdist::reductions {

// Two TV instances over n+1 and n+2 coordinates whose distance gap encodes
// |{x : P(x) = v}|. The case split follows v < 2^-n versus v >= 2^-n.
struct ReductionBundle {
  enum class Case { SmallV, LargeV };
  Case which = Case::SmallV;
  ProductDistribution phat, qhat;      // n+1 coordinates
  ProductDistribution pprime, qprime;  // n+2 coordinates
  Rational beta;
  Rational v;
};

// #SubsetSum -> #PMFEquals: p_i = 2^{a_i}/(1+2^{a_i}),
// v = 2^T * prod(1 - p_i). The subset-sum count of (a, T) equals
// |{x : P(x) = v}| exactly.
std::pair<ProductDistribution, Rational> subset_sum_to_pmf_equals(
    const oracle::SubsetSumInstance& inst);

// A beta in (0,1) separating v from every other point mass:
// P(x) < v implies P(x)(1/2+beta) < v(1/2-beta), and symmetrically.
// Exact method (n <= cap): a quarter of the smallest relative gap.
// Beyond the cap: 2^{-100 q} with q the bit length of the common
// denominator of all masses and v.
Rational choose_beta(const ProductDistribution& p, const Rational& v,
                     std::size_t cap = oracle::kDefaultCap);

ReductionBundle pmf_equals_to_tv_instances(const ProductDistribution& p, const Rational& v,
                                           std::size_t beta_cap = oracle::kDefaultCap);

// Inverts the bundle: |{x : P(x) = v}| from the two exact TV distances.
// Small v: (tv' - tv^) / (2 beta v); large v: 2^{n-1} (tv' - tv^) / beta.
// Throws std::logic_error if the result is not a nonnegative integer.
BigInt recover_count(const ReductionBundle& bundle, const Rational& tv_prime,
                     const Rational& tv_hat, const ProductDistribution& p, const Rational& v);

}  // namespace tvdist::reductions

#endif
