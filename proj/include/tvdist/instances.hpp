#ifndef TVDIST_INSTANCES_HPP
#define TVDIST_INSTANCES_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tvdist/rational.hpp"

namespace tvdist {

// Product of Bernoulli marginals over {0,1}^n, kept as exact rationals.
class ProductDistribution {
 public:
  ProductDistribution() = default;
  explicit ProductDistribution(std::vector<Rational> marginals);

  std::size_t size() const { return marginals_.size(); }
  const Rational& operator[](std::size_t i) const { return marginals_[i]; }
  const std::vector<Rational>& marginals() const { return marginals_; }

  // Exact product of marginals: prod p_i over the support of x times
  // prod (1 - p_i) elsewhere.
  Rational pmf(const std::vector<bool>& x) const;

 private:
  std::vector<Rational> marginals_;
};

struct TvInstance {
  ProductDistribution p;
  ProductDistribution q;

  TvInstance() = default;
  TvInstance(ProductDistribution p_in, ProductDistribution q_in);
  std::size_t size() const { return p.size(); }
};

struct EstimatorParams {
  Rational epsilon;  // relative accuracy, in (0, 1]
  Rational delta;    // confidence error, in (0, 1)
  std::uint64_t seed = 0;
};

// Replaces (p_i, q_i) by (1 - p_i, 1 - q_i) on masked coordinates.
// Total variation distance is unchanged.
TvInstance flip_coordinates(const TvInstance& inst, const std::vector<bool>& mask);

// Drops every coordinate with p_i == q_i; second element is the drop count.
std::pair<TvInstance, std::size_t> normalize(const TvInstance& inst);

struct HalfcaseViolation {
  std::size_t index = 0;
  bool flip_repairable = false;
  std::string reason;
};

struct HalfcaseReport {
  bool ok = true;
  std::vector<HalfcaseViolation> violations;
  std::string to_string() const;
};

// Checks 1/2 <= p_i < 1 and 0 < q_i <= p_i on every coordinate that would
// survive normalize().
HalfcaseReport validate_halfcase(const TvInstance& inst);

void validate_params(const EstimatorParams& params);

}  // namespace tvdist

#endif
