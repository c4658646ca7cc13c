#include "tvdist/reductions.hpp"

#include <functional>
#include <stdexcept>

namespace tvdist::reductions {

namespace {

// least r with all pmf values and v expressible over denominator 2^0 ... ;
// here simply the bit length of the lcm-style common denominator
unsigned long common_denominator_bits(const ProductDistribution& p, const Rational& v) {
  BigInt den(1);
  for (std::size_t i = 0; i < p.size(); ++i) den *= p[i].get_den();
  BigInt lcm;
  mpz_lcm(lcm.get_mpz_t(), den.get_mpz_t(), v.get_den().get_mpz_t());
  return mpz_sizeinbase(lcm.get_mpz_t(), 2);
}

void walk_pmf(const ProductDistribution& d, std::size_t i, Rational& acc,
              const std::function<void(const Rational&)>& leaf) {
  if (i == d.size()) {
    leaf(acc);
    return;
  }
  Rational a0 = acc * (Rational(1) - d[i]);
  walk_pmf(d, i + 1, a0, leaf);
  Rational a1 = acc * d[i];
  walk_pmf(d, i + 1, a1, leaf);
}

}  // namespace

std::pair<ProductDistribution, Rational> subset_sum_to_pmf_equals(
    const oracle::SubsetSumInstance& inst) {
  std::vector<Rational> p;
  Rational v = pow2(inst.target);
  for (long long a : inst.weights) {
    Rational w = pow2(static_cast<long>(a));
    Rational pi = w / (1 + w);
    pi.canonicalize();
    v *= 1 - pi;
    p.push_back(std::move(pi));
  }
  v.canonicalize();
  return {ProductDistribution(std::move(p)), std::move(v)};
}

Rational choose_beta(const ProductDistribution& p, const Rational& v, std::size_t cap) {
  if (p.size() <= cap) {
    bool found = false;
    Rational best;
    Rational acc(1);
    walk_pmf(p, 0, acc, [&](const Rational& mass) {
      if (mass == v) return;
      Rational gap = mass > v ? mass - v : v - mass;
      Rational rel = gap / (mass + v);
      if (!found || rel < best) {
        best = rel;
        found = true;
      }
    });
    if (!found) return Rational(1, 2);  // every mass equals v; any beta works
    Rational beta = best / 4;
    beta.canonicalize();
    return beta;
  }
  unsigned long bits = common_denominator_bits(p, v);
  return pow2(-static_cast<long>(100 * bits));
}

ReductionBundle pmf_equals_to_tv_instances(const ProductDistribution& p, const Rational& v,
                                           std::size_t beta_cap) {
  if (v <= 0) throw std::invalid_argument("pmf_equals_to_tv_instances: v must be positive");
  const std::size_t n = p.size();
  ReductionBundle bundle;
  bundle.v = v;
  bundle.beta = choose_beta(p, v, beta_cap);
  const Rational v2n = v * pow2(static_cast<long>(n));

  std::vector<Rational> phat(p.marginals()), qhat(n, Rational(1, 2));
  if (v2n < 1) {
    bundle.which = ReductionBundle::Case::SmallV;
    phat.push_back(Rational(1));
    qhat.push_back(v2n);
  } else {
    bundle.which = ReductionBundle::Case::LargeV;
    phat.push_back(1 / v2n);
    qhat.push_back(Rational(1));
  }
  std::vector<Rational> pprime = phat, qprime = qhat;
  pprime.push_back(Rational(1, 2) + bundle.beta);
  qprime.push_back(Rational(1, 2) - bundle.beta);

  bundle.phat = ProductDistribution(std::move(phat));
  bundle.qhat = ProductDistribution(std::move(qhat));
  bundle.pprime = ProductDistribution(std::move(pprime));
  bundle.qprime = ProductDistribution(std::move(qprime));
  return bundle;
}

BigInt recover_count(const ReductionBundle& bundle, const Rational& tv_prime,
                     const Rational& tv_hat, const ProductDistribution& p, const Rational& v) {
  Rational gap = tv_prime - tv_hat;
  Rational count;
  if (bundle.which == ReductionBundle::Case::SmallV) {
    count = gap / (2 * bundle.beta * v);
  } else {
    count = pow2(static_cast<long>(p.size()) - 1) * gap / bundle.beta;
  }
  count.canonicalize();
  if (count < 0 || count.get_den() != 1)
    throw std::logic_error("recover_count: result is not a nonnegative integer: " +
                           to_fraction_string(count));
  return count.get_num();
}

}  // namespace tvdist::reductions
