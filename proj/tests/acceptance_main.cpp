// End-to-end acceptance run: one line per criterion, nonzero exit on any
// failure. Tolerances are fixed here, not tuned at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "support.hpp"
#include "tvdist/fpras.hpp"
#include "tvdist/oracle.hpp"
#include "tvdist/reductions.hpp"
#include "tvdist/twoterm.hpp"

using namespace tvdist;
using testsupport::random_halfcase;

namespace {

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %s — %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double secs() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// p_i in [1/2, 15/16], q_i in (0, p_i], n in [lo, hi], nonempty after
// normalization
TvInstance draw_instance(Rng& rng, std::size_t lo, std::size_t hi) {
  for (;;) {
    std::size_t n = lo + rng.below(hi - lo + 1);
    TvInstance inst = random_halfcase(rng, n);
    if (normalize(inst).first.size() > 0) return inst;
  }
}

// --------------------------------------------------------------------------

void criterion_oracle_equivalence() {
  Timer timer;
  Rng rng(0xACCE01);
  const int trials = 200;
  int within = 0;
  FprasOptions opts;
  opts.threads = 2;
  for (int trial = 0; trial < trials; ++trial) {
    TvInstance inst = draw_instance(rng, 4, 14);
    EstimatorParams params{Rational(1, 10), Rational(1, 20),
                           0x5EED0000ULL + static_cast<std::uint64_t>(trial)};
    TvEstimate est = estimate_tv_halfcase(inst, params, opts);
    Rational exact = oracle::exact_tv(inst);
    double lo = 0.9 * to_double(exact), hi = 1.1 * to_double(exact);
    if (est.value >= lo && est.value <= hi) ++within;
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d/%d estimates within (1 +- 0.1) of the exact value (need >= 190); %.1fs",
                within, trials, timer.secs());
  report("oracle equivalence, eps=0.1 delta=0.05, n in [4,14]", within >= 190, detail);
}

void criterion_discretization_soundness() {
  Rng rng(0xACCE02);
  const int trials = 100;
  int sound = 0, bounded = 0, nonempty = 0;
  for (int trial = 0; trial < trials; ++trial) {
    TvInstance inst = draw_instance(rng, 3, 12);
    auto [norm, dropped] = normalize(inst);
    const std::size_t n = norm.size();
    LayerScheme scheme = contribution_bounds(norm, Rational(1, 30));
    long j = static_cast<long>(rng.below(static_cast<std::uint64_t>(scheme.u)));
    TwoTermConstraint c = build_layer_constraint(norm, j, scheme);

    auto original = oracle::enumerate_twoterm_solutions(c, 12);
    std::set<std::vector<std::size_t>> sprime;
    DiscretizedFamily family(c);
    family.enumerate([&](const std::vector<std::size_t>& s) {
      sprime.insert(s);
      return true;
    });

    bool ok = true;
    for (const auto& s : original.members) ok = ok && sprime.count(s) == 1;
    sound += ok ? 1 : 0;
    if (!original.members.empty()) {
      ++nonempty;
      if (sprime.size() <= (n + 1) * (n + 1) * original.members.size()) ++bounded;
    }
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "inclusion held on %d/%d constraints; blow-up bound held on %d/%d nonempty",
                sound, trials, bounded, nonempty);
  report("discretization soundness and (n+1)^2 blow-up", sound == trials && bounded == nonempty,
         detail);
}

void criterion_dp_exactness() {
  Rng rng(0xACCE03);
  const int trials = 100;
  int match = 0, with_dups = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 2 + rng.below(11);
    const bool dup = trial % 4 != 0;  // 75 instances exercise repeated tuples
    TwoTermConstraint c;
    c.A = rng.uniform01() * 0.5;
    c.B = rng.uniform01() * 0.5;
    for (std::size_t i = 0; i < n; ++i) {
      if (dup && i > 0 && rng.below(2) == 0) {
        c.x.push_back(c.x[i - 1]);
        c.y.push_back(c.y[i - 1]);
        continue;
      }
      double x = rng.uniform01() * 1.5;
      double z = rng.uniform01() * 2.5;
      c.x.push_back(x);
      c.y.push_back(z - x);
    }
    bool has_dup = false;
    for (std::size_t i = 1; i < n; ++i)
      has_dup = has_dup || (c.x[i] == c.x[i - 1] && c.y[i] == c.y[i - 1]);
    if (has_dup) ++with_dups;

    // engine side: class totals plus the empty set
    BigInt engine = 0;
    for (const auto& cc : enumerate_classes(c)) engine += cc.n;
    if (static_cast<long double>(c.A) + static_cast<long double>(c.B) <=
        1.0L + static_cast<long double>(kGuardBand))
      engine += 1;

    // independent brute force over the same scaled problem
    const int tenn = 10 * static_cast<int>(n);
    const std::vector<double> z = c.z();
    BigInt brute = 0;
    if (static_cast<long double>(c.A) + static_cast<long double>(c.B) <=
        1.0L + static_cast<long double>(kGuardBand))
      brute += 1;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
      double w1 = 0, w2 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1) {
          w1 = std::max(w1, c.x[i]);
          w2 = std::max(w2, z[i]);
        }
      }
      ClassKey key;
      key.W1 = w1;
      key.W2 = w2;
      for (std::size_t i = 0; i < n; ++i) key.sigma.push_back(i);
      DiscretizedWeights dw = discretize(c, key);
      long long s1 = 0, s2 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1) {
          s1 += dw.xprime[i];
          s2 += dw.zprime[i];
        }
      }
      long double t1 = w1 > 0 ? static_cast<long double>(w1) / tenn * s1 : 0.0L;
      long double t2 = w2 > 0 ? static_cast<long double>(w2) / tenn * s2 : 0.0L;
      long double lhs = static_cast<long double>(c.A) * std::exp(t1) +
                        static_cast<long double>(c.B) * std::exp(t2);
      if (lhs <= 1.0L + static_cast<long double>(kGuardBand)) brute += 1;
    }
    if (engine == brute) ++match;
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d/%d exact integer matches (%d instances with repeated weight tuples)", match,
                trials, with_dups);
  report("DP counts equal brute force on the scaled problem", match == trials && with_dups >= 20,
         detail);
}

void criterion_sampler_uniformity() {
  Rng grng(0xACCE04);
  const int instances = 20;
  const int draws = 100000;
  int passed = 0;
  double min_p = 1.0;
  for (int inst = 0; inst < instances; ++inst) {
    TwoTermConstraint c;
    const std::size_t n = 5 + grng.below(4);  // n <= 8
    c.A = 0.05 + grng.uniform01() * 0.4;
    c.B = 0.05 + grng.uniform01() * 0.4;
    for (std::size_t i = 0; i < n; ++i) {
      double x = grng.uniform01();
      double z = grng.uniform01() * 1.5;
      c.x.push_back(x);
      c.y.push_back(z - x);
    }
    DiscretizedFamily family(c);
    if (family.total() < 2 || family.total() > 4096) {
      --inst;  // redraw: chi-squared needs a few cells with decent expectation
      continue;
    }
    std::map<std::vector<std::size_t>, int> freq;
    Rng rng(0xD0D0 + static_cast<std::uint64_t>(inst));
    for (int d = 0; d < draws; ++d) freq[family.sample(rng)] += 1;
    const double cells = family.total().get_d();
    const double expected = draws / cells;
    double stat = 0.0;
    std::size_t seen = 0;
    family.enumerate([&](const std::vector<std::size_t>& member) {
      double got = freq.count(member) ? freq.at(member) : 0.0;
      stat += (got - expected) * (got - expected) / expected;
      ++seen;
      return true;
    });
    double pvalue = testsupport::chi2_sf(stat, cells - 1.0);
    min_p = std::min(min_p, pvalue);
    if (pvalue > 1e-3) ++passed;
  }
  char detail[160];
  std::snprintf(detail, sizeof detail, "%d/%d chi-squared tests not rejected (min p = %.4g)",
                passed, instances, min_p);
  report("sampler uniformity over the discretized family", passed == instances, detail);
}

void criterion_reduction_identities() {
  Rng rng(0xACCE05);
  const int bundles = 50, trips = 50;
  int identity_ok = 0, trip_ok = 0;
  for (int trial = 0; trial < bundles; ++trial) {
    std::size_t n = 1 + rng.below(8);  // bundle adds 2, oracle runs at n + 2 <= 10
    std::vector<Rational> m;
    for (std::size_t i = 0; i < n; ++i) m.push_back(Rational(1 + rng.below(31), 32));
    ProductDistribution p(m);
    std::vector<bool> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rng.below(2) == 1;
    Rational v = rng.below(3) == 0 ? Rational(1 + rng.below(63), 64) : p.pmf(x);

    auto bundle = reductions::pmf_equals_to_tv_instances(p, v);
    Rational tv_hat = oracle::exact_tv(TvInstance(bundle.phat, bundle.qhat));
    Rational tv_prime = oracle::exact_tv(TvInstance(bundle.pprime, bundle.qprime));
    BigInt truth = oracle::count_pmf_equals(p, v);

    // the recovery identity as an exact rational equality
    Rational lhs = tv_prime - tv_hat;
    Rational rhs;
    if (bundle.which == reductions::ReductionBundle::Case::SmallV)
      rhs = 2 * bundle.beta * v * Rational(truth);
    else
      rhs = bundle.beta * Rational(truth) / pow2(static_cast<long>(n) - 1);
    bool ok = lhs == rhs;
    ok = ok && reductions::recover_count(bundle, tv_prime, tv_hat, p, v) == truth;
    identity_ok += ok ? 1 : 0;
  }
  for (int trial = 0; trial < trips; ++trial) {
    std::size_t n = 1 + rng.below(8);
    oracle::SubsetSumInstance inst;
    for (std::size_t i = 0; i < n; ++i)
      inst.weights.push_back(static_cast<long long>(rng.below(11)) - 5);
    inst.target = static_cast<long long>(rng.below(9)) - 4;
    auto [p, v] = reductions::subset_sum_to_pmf_equals(inst);
    auto bundle = reductions::pmf_equals_to_tv_instances(p, v);
    Rational tv_hat = oracle::exact_tv(TvInstance(bundle.phat, bundle.qhat));
    Rational tv_prime = oracle::exact_tv(TvInstance(bundle.pprime, bundle.qprime));
    BigInt recovered = reductions::recover_count(bundle, tv_prime, tv_hat, p, v);
    if (recovered == oracle::count_subset_sum(inst)) ++trip_ok;
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "recovery identity exact on %d/%d bundles; subset-sum round trip exact on %d/%d",
                identity_ok, bundles, trip_ok, trips);
  report("hardness-reduction identities and round trip", identity_ok == bundles && trip_ok == trips,
         detail);
}

void criterion_m_bound() {
  Rng rng(0xACCE06);
  const int trials = 200;
  int clean = 0;
  std::string example;
  for (int trial = 0; trial < trials; ++trial) {
    TvInstance inst = draw_instance(rng, 2, 12);
    auto [norm, dropped] = normalize(inst);
    LayerScheme scheme = contribution_bounds(norm, Rational(1, 30));
    const std::size_t n = norm.size();
    bool ok = true;
    std::vector<bool> x(n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n) && ok; ++mask) {
      for (std::size_t i = 0; i < n; ++i) x[i] = mask >> i & 1;
      Rational gap = norm.p.pmf(x) - norm.q.pmf(x);
      if (gap > 0 && gap < scheme.m) {
        ok = false;
        if (example.empty()) {
          example = "first counterexample: gap " + to_fraction_string(gap) + " < m " +
                    to_fraction_string(scheme.m);
        }
      }
    }
    clean += ok ? 1 : 0;
  }
  char detail[256];
  std::snprintf(detail, sizeof detail,
                "%d/%d instances satisfy the bound; %s. The product-formula m is not a valid "
                "lower bound on nonzero contributions; the estimator compensates with "
                "refinement layers below m.",
                clean, trials, example.empty() ? "no counterexample" : example.c_str());
  report("every nonzero contribution >= m (product formula)", clean == trials, detail);
}

void criterion_fast_paths() {
  Timer timer;
  Rng rng(0xACCE07);
  FprasOptions opts;
  opts.threads = 2;

  int uniform_within = 0;
  const int uruns = 100;
  for (int run = 0; run < uruns; ++run) {
    std::size_t n = 4 + rng.below(11);  // n <= 14
    std::vector<Rational> pm;
    for (std::size_t i = 0; i < n; ++i) pm.push_back(Rational(1 + rng.below(63), 64));
    ProductDistribution p(pm);
    std::vector<Rational> qm(n, Rational(1, 2));
    TvInstance inst{p, ProductDistribution(qm)};
    EstimatorParams params{Rational(1, 10), Rational(1, 20),
                           0xAB00ULL + static_cast<std::uint64_t>(run)};
    TvEstimate est = estimate_tv_uniform(p, params, opts);
    double exact = to_double(oracle::exact_tv(inst));
    if (exact == 0.0) {
      uniform_within += est.value == 0.0 ? 1 : 0;
    } else if (est.value >= 0.9 * exact && est.value <= 1.1 * exact) {
      ++uniform_within;
    }
  }

  int dq_within = 0;
  const int druns = 100;
  for (int run = 0; run < druns; ++run) {
    std::size_t n = 4 + rng.below(11);
    Rational a1(1 + rng.below(31), 64), a2(1 + rng.below(31), 64);
    std::vector<Rational> pm, qm;
    for (std::size_t i = 0; i < n; ++i) {
      Rational q = rng.below(2) == 0 ? a1 : a2;
      // keep q <= p <= 15/16 with p >= 1/2
      long lo = 32;
      long pk = lo + static_cast<long>(rng.below(29));
      Rational p(pk, 64);
      if (p < q) p = q;
      pm.push_back(p);
      qm.push_back(q);
    }
    TvInstance inst{ProductDistribution(pm), ProductDistribution(qm)};
    EstimatorParams params{Rational(1, 10), Rational(1, 20),
                           0xCD00ULL + static_cast<std::uint64_t>(run)};
    TvEstimate est = estimate_tv_distinct_q(inst, params, opts);
    double exact = to_double(oracle::exact_tv(inst));
    if (exact == 0.0) {
      dq_within += est.value == 0.0 ? 1 : 0;
    } else if (est.value >= 0.9 * exact && est.value <= 1.1 * exact) {
      ++dq_within;
    }
  }

  char detail[200];
  std::snprintf(detail, sizeof detail,
                "uniform-q within bounds on %d/%d seeds; two-value-q within bounds on %d/%d; %.1fs",
                uniform_within, uruns, dq_within, druns, timer.secs());
  report("fast paths track the oracle (uniform and two distinct q)",
         uniform_within >= 95 && dq_within >= 95, detail);
}

void criterion_scaling_smoke() {
  Timer timer;
  std::vector<Rational> p(60, Rational(15, 16)), q(60, Rational(7, 8));
  TvInstance inst{ProductDistribution(p), ProductDistribution(q)};
  EstimatorParams params{Rational(1, 4), Rational(1, 4), 0x60CAFE};
  FprasOptions opts;
  opts.threads = 2;
  TvEstimate est = estimate_tv_halfcase(inst, params, opts);
  const double elapsed = timer.secs();

  bool nonneg = est.value >= 0.0;
  bool in_time = elapsed <= 900.0;

  // t-hat must be nonincreasing in the threshold up to 3 Monte Carlo
  // standard errors
  bool monotone = true;
  for (std::size_t i = 1; i < est.layers.size(); ++i) {
    const auto& lo = est.layers[i - 1].t_hat;
    const auto& hi = est.layers[i].t_hat;
    auto se = [](const CountEstimate& e) {
      if (e.exact || e.samples == 0) return 0.0;
      double rho = static_cast<double>(e.hits) / static_cast<double>(e.samples);
      return e.discretized_total.get_d() *
             std::sqrt(std::max(rho * (1 - rho), 1e-12) / static_cast<double>(e.samples));
    };
    if (hi.value > lo.value + 3.0 * (se(lo) + se(hi)) + 1e-9) monotone = false;
  }

  char detail[200];
  std::snprintf(detail, sizeof detail,
                "n=60 finished in %.0fs (budget 900s), value %.4f, %zu layers, monotone within "
                "3 MC standard errors: %s",
                elapsed, est.value, est.layers.size(), monotone ? "yes" : "no");
  report("scaling smoke test at n=60, eps=0.25", nonneg && in_time && monotone, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string only = argc > 1 ? argv[1] : "";
  auto want = [&only](const char* tag) {
    return only.empty() || std::string(tag).find(only) != std::string::npos;
  };
  std::printf("acceptance run, fixed seeds, pinned tolerances\n");
  if (want("soundness")) criterion_discretization_soundness();
  if (want("dp")) criterion_dp_exactness();
  if (want("sampler")) criterion_sampler_uniformity();
  if (want("reduction")) criterion_reduction_identities();
  if (want("mbound")) criterion_m_bound();
  if (want("oracle")) criterion_oracle_equivalence();
  if (want("fastpath")) criterion_fast_paths();
  if (want("smoke")) criterion_scaling_smoke();
  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
