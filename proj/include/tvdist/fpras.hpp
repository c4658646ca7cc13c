#ifndef TVDIST_FPRAS_HPP
#define TVDIST_FPRAS_HPP

#include <cstdint>
#include <vector>

#include "tvdist/instances.hpp"
#include "tvdist/rational.hpp"
#include "tvdist/twoterm.hpp"

namespace tvdist {

// Geometric layering of the normalized contributions Y_S = max(0, P(x)-Q(x))/m.
struct LayerScheme {
  Rational m;     // the minimum-contribution product formula
  Rational U;     // 1/m
  long u = 0;     // least integer with (1+eps0)^u >= U
  Rational eps0;  // layering ratio minus one

  // Certain lower bound on any nonzero |P(x) - Q(x)| from the common
  // denominator of all point masses. The product formula above can
  // overshoot the true minimum; layers are extended below m until the
  // uncovered mass is certifiably negligible, and this floor is where the
  // extension may always stop.
  Rational floor_m;
  Rational prod_p;  // product of the p_i
  Rational prod_q;  // product of the q_i
};

struct LayerReport {
  long j = 0;              // layer index; negative for extension layers
  double threshold = 0.0;  // (1+eps0)^j in units of m
  CountEstimate t_hat;     // estimate of #{S : Y_S >= (1+eps0)^j}
};

struct TvEstimate {
  double value = 0.0;
  Rational epsilon;
  Rational delta;
  std::vector<LayerReport> layers;  // sorted by ascending j
  std::uint64_t seed = 0;
  double elapsed_ms = 0.0;
  std::size_t dropped = 0;          // coordinates removed by normalize
  std::vector<bool> flipped;        // flip mask applied before estimating
};

struct FprasOptions {
  int threads = 0;  // 0 = hardware concurrency
  std::int64_t enum_threshold = 1 << 17;
  int distinct_q_cap = 3;
};

// m, U and u for a normalized half-case instance. Throws on an empty
// instance (the caller returns TV = 0 directly).
LayerScheme contribution_bounds(const TvInstance& inst, const Rational& eps0);

// Complement-form constraint whose solution count equals
// t_j = #{S : Y_S >= (1+eps0)^j}: constants A_j = (1+eps0)^j m / prod(p),
// B = prod(q)/prod(p), weights x_i = ln(p_i/(1-p_i)),
// z_i = ln(p_i(1-q_i)/((1-p_i)q_i)). Carries the exact rational payload.
TwoTermConstraint build_layer_constraint(const TvInstance& inst, long j, const LayerScheme& s);

TvEstimate estimate_tv_halfcase(const TvInstance& inst, const EstimatorParams& params,
                                const FprasOptions& opts = {});

// Arbitrary nondegenerate p against the uniform distribution; coordinates
// with p_i < 1/2 are flipped first, each layer reduces to a single-term
// (knapsack) count.
TvEstimate estimate_tv_uniform(const ProductDistribution& p, const EstimatorParams& params,
                               const FprasOptions& opts = {});

// Arbitrary nondegenerate p, q taking at most opts.distinct_q_cap distinct
// values; per layer, sums grouped knapsack counts over all per-group
// Hamming-count tuples.
TvEstimate estimate_tv_distinct_q(const TvInstance& inst, const EstimatorParams& params,
                                  const FprasOptions& opts = {});

}  // namespace tvdist

#endif
