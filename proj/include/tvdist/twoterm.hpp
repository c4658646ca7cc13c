#ifndef TVDIST_TWOTERM_HPP
#define TVDIST_TWOTERM_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "tvdist/rational.hpp"
#include "tvdist/rng.hpp"

namespace tvdist {

// Solution family of A*exp(sum_{i in S} x_i) + B*exp(sum_{i in S} x_i + y_i) <= 1.
// Requires A, B >= 0, x_i >= 0 and z_i := x_i + y_i >= 0, which makes the
// family downward closed.
struct TwoTermConstraint {
  double A = 0.0;
  double B = 0.0;
  std::vector<double> x;
  std::vector<double> y;

  // Exact rational form when the constants and the per-item factors
  // e^{x_i}, e^{z_i} are rational (true for layer constraints, where
  // e^{x_i} = p_i/(1-p_i)). Used to settle near-boundary memberships.
  struct ExactForm {
    Rational A;
    Rational B;
    std::vector<Rational> wx;  // e^{x_i}
    std::vector<Rational> wz;  // e^{x_i + y_i}
  };
  std::optional<ExactForm> exact;

  std::size_t size() const { return x.size(); }
  std::vector<double> z() const;
  void validate() const;  // throws std::invalid_argument on sign violations
};

// Relative half-width of the float guard band around the threshold 1.
inline constexpr double kGuardBand = 0x1.0p-40;

enum class Verdict { In, Out, Band };

// Long-double evaluation of the original (undiscretized) constraint on the
// index set S, with Band for |lhs - 1| <= kGuardBand. Exact rational
// resolution is applied when c.exact is present, so In/Out are then exact
// and Band never escapes.
Verdict twoterm_membership(const TwoTermConstraint& c, const std::vector<std::size_t>& s);

// One class of the adaptive discretization: all sets whose maxima are
// exactly (W1, W2) in value. sigma/r1/r2 are index pools (r1: x_i == W1,
// r2: z_i == W2).
struct ClassKey {
  double W1 = 0.0;
  double W2 = 0.0;
  std::size_t ell1 = 0;  // smallest index attaining W1
  std::size_t ell = 0;   // smallest index attaining W2
  std::vector<std::size_t> sigma;
  std::vector<std::size_t> r1;
  std::vector<std::size_t> r2;
};

// Class-scaled integer weights, aligned with key.sigma.
// xprime[i] = floor(10n/W1 * x_i) clamped to [0, 10n]; 0 throughout when W1 == 0.
struct DiscretizedWeights {
  std::vector<int> xprime;
  std::vector<int> zprime;
};

DiscretizedWeights discretize(const TwoTermConstraint& c, const ClassKey& key);

// Per-level solution counts for one class, conditioned on committed sums and
// on which maxima are still unattained. Level k covers items
// key.sigma[0..k-1]; entries are keyed by (s1, s2, needs) packed into 64 bits.
struct CountTable {
  struct Entry {
    std::uint64_t key;
    BigInt count;
  };
  std::vector<std::vector<Entry>> levels;  // levels[k], sorted by key
  std::uint64_t pack_s2 = 0;               // packing radix for s2
  BigInt lookup(std::size_t level, int s1, int s2, int needs) const;
};

// Exact number of class members satisfying the scaled constraint, realized
// as F4 - (F1 + F2 - F3) over the needs flags.
std::pair<CountTable, BigInt> count_discretized(const TwoTermConstraint& c, const ClassKey& key);

struct ClassCount {
  ClassKey key;
  BigInt n;
};

// All classes with nonzero count, deduplicated by (W1, W2) value.
// The empty set is not part of any class; it belongs to the discretized
// family iff A + B <= 1.
std::vector<ClassCount> enumerate_classes(const TwoTermConstraint& c);

namespace detail {
class FamilyImpl;
}

// The discretized solution family S' of a constraint: per-class counts plus
// the empty-set member. Supports exact totals, bounded enumeration and
// uniform sampling.
class DiscretizedFamily {
 public:
  explicit DiscretizedFamily(const TwoTermConstraint& c);
  ~DiscretizedFamily();
  DiscretizedFamily(DiscretizedFamily&&) noexcept;
  DiscretizedFamily& operator=(DiscretizedFamily&&) noexcept;

  const BigInt& total() const;
  bool contains_empty() const;
  std::vector<ClassCount> classes() const;

  // Uniform sample from S' (class choice and walk share the stream).
  // Total must be positive.
  std::vector<std::size_t> sample(Rng& rng) const;

  // Uniform sample from class number `ordinal` of classes().
  std::vector<std::size_t> sample_class_member(std::size_t ordinal, Rng& rng) const;

  // Visits every member (as a sorted index set) while the visitor returns
  // true; returns false if the visitor aborted.
  bool enumerate(const std::function<bool(const std::vector<std::size_t>&)>& visit) const;

 private:
  std::unique_ptr<detail::FamilyImpl> impl_;
};

// Uniform sample over the discretized family; thin wrapper used by tests.
std::vector<std::size_t> sample_discretized(const DiscretizedFamily& family, Rng& rng);

struct CountEstimate {
  double value = 0.0;          // estimate of |S|
  BigInt discretized_total = 0;  // |S'|
  std::int64_t hits = 0;
  std::int64_t samples = 0;
  bool exact = false;  // true when S' was exhaustively checked
};

struct EngineOptions {
  // When |S'| is at most this, the engine checks every member against the
  // original constraint instead of sampling. Set to 0 to force Monte Carlo.
  std::int64_t enum_threshold = 1 << 17;
  // Exponent of the (n+1)^power preimage bound in the sample-count formula.
  int ratio_bound_power = 2;
};

// (1 +- epsilon)-estimate of |S| with confidence 1 - delta. Monte Carlo path
// draws t = ceil(3 (n+1)^power ln(2/delta) / epsilon^2) uniform members of S'
// and rechecks each against the original constraint.
CountEstimate estimate_count(const TwoTermConstraint& c, double epsilon, double delta,
                             std::uint64_t seed, const EngineOptions& opts = {});

// #Knapsack: subsets with sum_{i in S} w_i <= cap, via the same engine with
// B = 0 (single maximum, preimage bound n+1).
CountEstimate count_knapsack(const std::vector<double>& w, double cap, double epsilon,
                             double delta, std::uint64_t seed, const EngineOptions& opts = {});

// #Knapsack restricted to |S cap block_g| = r_g for a partition into blocks.
CountEstimate count_knapsack_grouped(const std::vector<double>& w, double cap,
                                     const std::vector<int>& group_of, const std::vector<int>& r,
                                     double epsilon, double delta, std::uint64_t seed,
                                     const EngineOptions& opts = {});

}  // namespace tvdist

#endif
