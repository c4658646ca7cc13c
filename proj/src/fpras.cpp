#include "tvdist/fpras.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "tvdist/errors.hpp"

namespace tvdist {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(int threads, std::size_t count, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      body(i);
    }
  };
  std::vector<std::thread> pool;
  const int spawn = std::min<int>(threads, static_cast<int>(count));
  pool.reserve(static_cast<std::size_t>(spawn));
  for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

Rational power_of(const Rational& base, long e) {
  if (e >= 0) return rational_pow(base, static_cast<unsigned long>(e));
  return 1 / rational_pow(base, static_cast<unsigned long>(-e));
}

struct LayeredInputs {
  LayerScheme scheme;
  std::size_t n = 0;
  // t_hat for one layer at the given Monte Carlo accuracy and confidence
  std::function<CountEstimate(long j, double eps_mc, double delta_layer, std::uint64_t seed)>
      layer_fn;
  // optional (1 +- eps)-estimate of an upper bound on #{S : Y_S > 0}
  std::function<CountEstimate(double eps_mc, double delta_layer, std::uint64_t seed)> nonzero_fn;
};

double recombine(const std::vector<LayerReport>& layers, double eps0, double m) {
  if (layers.empty()) return 0.0;
  // layers sorted ascending; Abel-reorganized sum charging each bin its
  // upper threshold
  double acc = layers.front().t_hat.value * std::pow(1.0 + eps0, layers.front().j + 1);
  for (std::size_t i = 1; i < layers.size(); ++i) {
    const double pj = std::pow(1.0 + eps0, layers[i].j);
    acc += layers[i].t_hat.value * eps0 * pj;
  }
  return m * acc;
}

TvEstimate run_layered(const LayeredInputs& in, const EstimatorParams& params,
                       const FprasOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  const int threads = resolve_threads(opts.threads);
  const LayerScheme& scheme = in.scheme;
  const long u = scheme.u;
  const double eps_d = to_double(params.epsilon);
  const double eps0_d = to_double(scheme.eps0);
  const double delta_d = to_double(params.delta);
  const double m_d = to_double(scheme.m);

  std::map<long, LayerReport> reports;

  // standard layers at per-layer confidence delta/(2u)
  {
    const double delta_layer = delta_d / (2.0 * static_cast<double>(u));
    std::vector<LayerReport> std_layers(static_cast<std::size_t>(u));
    parallel_for(threads, static_cast<std::size_t>(u), [&](std::size_t idx) {
      const long j = static_cast<long>(idx);
      LayerReport rep;
      rep.j = j;
      rep.threshold = std::pow(1.0 + eps0_d, static_cast<double>(j));
      rep.t_hat = in.layer_fn(j, eps0_d, delta_layer, derive_seed(params.seed, j));
      std_layers[idx] = std::move(rep);
    });
    for (auto& rep : std_layers) reports[rep.j] = std::move(rep);
  }

  // upper bound on the number of sets with positive contribution, used to
  // certify how much mass the layers may still be missing below their
  // lowest threshold
  double nonzero_ub;
  if (in.nonzero_fn) {
    CountEstimate cnz = in.nonzero_fn(eps0_d, delta_d / 4.0,
                                      derive_seed(params.seed, u));
    nonzero_ub = cnz.exact ? cnz.value : cnz.value / (1.0 - eps0_d);
  } else {
    nonzero_ub = std::ldexp(1.0, static_cast<int>(in.n));
  }

  // tail slack: (1+eps0)^2 (1+s) <= 1+eps keeps the total within budget
  const double slack = (1.0 + eps_d) / ((1.0 + eps0_d) * (1.0 + eps0_d)) - 1.0;

  auto lowest = [&]() -> const LayerReport& { return reports.begin()->second; };
  auto missing_bound = [&]() {
    const double t_low = lowest().t_hat.exact ? lowest().t_hat.value
                                              : lowest().t_hat.value / (1.0 + eps0_d);
    return std::max(0.0, nonzero_ub - t_low);
  };

  long next_ext = -1;
  for (;;) {
    std::vector<LayerReport> ordered;
    ordered.reserve(reports.size());
    for (auto& [j, rep] : reports) ordered.push_back(rep);
    const double v_cur = recombine(ordered, eps0_d, m_d);
    const double tau_low = m_d * std::pow(1.0 + eps0_d, static_cast<double>(lowest().j));
    if (scheme.m * power_of(Rational(1) + scheme.eps0, lowest().j) <= scheme.floor_m) break;
    if (missing_bound() == 0.0) break;
    if (v_cur > 0 && tau_low * missing_bound() <= slack * v_cur) break;

    // one round of extension layers below m, chunked for parallelism
    const int chunk = std::max(1, threads);
    std::vector<LayerReport> ext(static_cast<std::size_t>(chunk));
    parallel_for(threads, static_cast<std::size_t>(chunk), [&](std::size_t idx) {
      const long j = next_ext - static_cast<long>(idx);
      const long k = -j;  // extension depth 1, 2, ...
      const double delta_layer =
          delta_d / (4.0 * static_cast<double>(k) * static_cast<double>(k + 1));
      LayerReport rep;
      rep.j = j;
      rep.threshold = std::pow(1.0 + eps0_d, static_cast<double>(j));
      rep.t_hat = in.layer_fn(j, eps0_d, delta_layer, derive_seed(params.seed, j));
      ext[idx] = std::move(rep);
    });
    for (auto& rep : ext) reports[rep.j] = std::move(rep);
    next_ext -= chunk;
  }

  TvEstimate out;
  out.epsilon = params.epsilon;
  out.delta = params.delta;
  out.seed = params.seed;
  out.layers.reserve(reports.size());
  for (auto& [j, rep] : reports) out.layers.push_back(std::move(rep));
  out.value = recombine(out.layers, eps0_d, m_d);
  out.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();
  return out;
}

Rational min_contribution_formula(const TvInstance& inst) {
  const std::size_t n = inst.size();
  // prefix/suffix products of q
  std::vector<Rational> pre(n + 1, Rational(1)), suf(n + 1, Rational(1));
  for (std::size_t i = 0; i < n; ++i) pre[i + 1] = pre[i] * inst.q[i];
  for (std::size_t i = n; i-- > 0;) suf[i] = suf[i + 1] * inst.q[i];
  Rational best;
  bool first = true;
  for (std::size_t i = 0; i < n; ++i) {
    Rational cand = (inst.p[i] - inst.q[i]) * pre[i] * suf[i + 1];
    if (first || cand < best) {
      best = cand;
      first = false;
    }
  }
  best.canonicalize();
  return best;
}

Rational denominator_floor(const TvInstance& inst) {
  BigInt den(1);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    den *= inst.p[i].get_den();
    den *= inst.q[i].get_den();
  }
  return Rational(BigInt(1), den);
}

long layer_count_for(const Rational& one_plus_eps0, const Rational& big_u) {
  double est = std::log(to_double(big_u)) / std::log(to_double(one_plus_eps0));
  long u = est > 0 ? static_cast<long>(std::ceil(est)) : 0;
  if (u < 1) u = 1;
  while (rational_pow(one_plus_eps0, static_cast<unsigned long>(u)) < big_u) ++u;
  while (u > 1 &&
         rational_pow(one_plus_eps0, static_cast<unsigned long>(u - 1)) >= big_u)
    --u;
  return u;
}

void ensure_nondegenerate(const ProductDistribution& d, const char* who) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 0 || d[i] == 1) {
      std::ostringstream os;
      os << who << ": marginal " << i << " is degenerate (0 or 1)";
      throw PreconditionViolation(os.str());
    }
  }
}

TwoTermConstraint layer_constraint_impl(const TvInstance& inst, const Rational& tau,
                                        const Rational& prod_p, const Rational& prod_q) {
  const std::size_t n = inst.size();
  TwoTermConstraint c;
  TwoTermConstraint::ExactForm ef;
  ef.A = tau / prod_p;
  ef.B = prod_q / prod_p;
  c.A = to_double(ef.A);
  c.B = to_double(ef.B);
  if ((c.A == 0 && ef.A > 0) || (c.B == 0 && ef.B > 0))
    throw std::overflow_error("layer constant underflows double precision");
  c.x.reserve(n);
  c.y.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rational wx = inst.p[i] / (1 - inst.p[i]);
    Rational wz = wx * ((1 - inst.q[i]) / inst.q[i]);
    wx.canonicalize();
    wz.canonicalize();
    double x = std::log(to_double(wx));
    double zv = std::log(to_double(wz));
    if (x < 0) x = 0;  // p_i == 1/2 rounds to exactly zero
    if (zv < 0) zv = 0;
    c.x.push_back(x);
    c.y.push_back(zv - x);
    ef.wx.push_back(std::move(wx));
    ef.wz.push_back(std::move(wz));
  }
  c.exact = std::move(ef);
  return c;
}

// Counts of sets with P(x) >= Q(x), in complement form: a single-term
// constraint (prod q / prod p) * prod_{i in T} wz_i <= 1 over T = [n] \ S.
CountEstimate nonzero_upper_estimate(const TvInstance& inst, const Rational& prod_p,
                                     const Rational& prod_q, double eps_mc, double delta,
                                     std::uint64_t seed, std::int64_t enum_threshold) {
  const std::size_t n = inst.size();
  TwoTermConstraint c;
  TwoTermConstraint::ExactForm ef;
  ef.A = prod_q / prod_p;
  ef.B = Rational(0);
  c.A = to_double(ef.A);
  c.B = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Rational wz = (inst.p[i] / (1 - inst.p[i])) * ((1 - inst.q[i]) / inst.q[i]);
    wz.canonicalize();
    double zv = std::log(to_double(wz));
    if (zv < 0) zv = 0;
    c.x.push_back(zv);
    c.y.push_back(-zv);
    ef.wx.push_back(std::move(wz));
    ef.wz.push_back(Rational(1));
  }
  c.exact = std::move(ef);
  EngineOptions eopts;
  eopts.enum_threshold = enum_threshold;
  eopts.ratio_bound_power = 1;
  return estimate_count(c, eps_mc, delta, seed, eopts);
}

}  // namespace

LayerScheme contribution_bounds(const TvInstance& inst, const Rational& eps0) {
  if (inst.size() == 0)
    throw std::invalid_argument("contribution_bounds: empty normalized instance");
  HalfcaseReport hc = validate_halfcase(inst);
  if (!hc.ok)
    throw PreconditionViolation("contribution_bounds: " + hc.to_string());
  LayerScheme s;
  s.eps0 = eps0;
  s.m = min_contribution_formula(inst);
  s.U = 1 / s.m;
  s.u = layer_count_for(Rational(1) + eps0, s.U);
  s.floor_m = denominator_floor(inst);
  s.prod_p = Rational(1);
  s.prod_q = Rational(1);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    s.prod_p *= inst.p[i];
    s.prod_q *= inst.q[i];
  }
  s.prod_p.canonicalize();
  s.prod_q.canonicalize();
  return s;
}

TwoTermConstraint build_layer_constraint(const TvInstance& inst, long j, const LayerScheme& s) {
  Rational tau = s.m * power_of(Rational(1) + s.eps0, j);
  tau.canonicalize();
  return layer_constraint_impl(inst, tau, s.prod_p, s.prod_q);
}

TvEstimate estimate_tv_halfcase(const TvInstance& inst, const EstimatorParams& params,
                                const FprasOptions& opts) {
  validate_params(params);
  HalfcaseReport hc = validate_halfcase(inst);
  if (!hc.ok) throw PreconditionViolation("half-case precondition failed: " + hc.to_string());

  auto [norm, dropped] = normalize(inst);
  TvEstimate out;
  if (norm.size() == 0) {
    out.epsilon = params.epsilon;
    out.delta = params.delta;
    out.seed = params.seed;
    out.dropped = dropped;
    return out;
  }

  LayeredInputs in;
  in.scheme = contribution_bounds(norm, params.epsilon / 3);
  in.n = norm.size();
  const LayerScheme& scheme = in.scheme;
  in.layer_fn = [&norm, &scheme, &opts](long j, double eps_mc, double delta_layer,
                                        std::uint64_t seed) {
    TwoTermConstraint c = build_layer_constraint(norm, j, scheme);
    EngineOptions eopts;
    eopts.enum_threshold = opts.enum_threshold;
    eopts.ratio_bound_power = 2;
    return estimate_count(c, eps_mc, delta_layer, seed, eopts);
  };
  in.nonzero_fn = [&norm, &scheme, &opts](double eps_mc, double delta_layer,
                                          std::uint64_t seed) {
    return nonzero_upper_estimate(norm, scheme.prod_p, scheme.prod_q, eps_mc, delta_layer, seed,
                                  opts.enum_threshold);
  };

  out = run_layered(in, params, opts);
  out.dropped = dropped;
  return out;
}

TvEstimate estimate_tv_uniform(const ProductDistribution& p, const EstimatorParams& params,
                               const FprasOptions& opts) {
  validate_params(params);
  ensure_nondegenerate(p, "estimate_tv_uniform");
  const std::size_t n = p.size();

  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < n; ++i) mask[i] = p[i] < Rational(1, 2);
  std::vector<Rational> half(n, Rational(1, 2));
  TvInstance flipped = flip_coordinates(TvInstance(p, ProductDistribution(half)), mask);

  auto [norm, dropped] = normalize(flipped);
  TvEstimate out;
  out.flipped = mask;
  if (norm.size() == 0) {
    out.epsilon = params.epsilon;
    out.delta = params.delta;
    out.seed = params.seed;
    out.dropped = dropped;
    return out;
  }

  LayeredInputs in;
  in.scheme = contribution_bounds(norm, params.epsilon / 3);
  in.n = norm.size();
  const LayerScheme& scheme = in.scheme;
  // with uniform q the two exponential terms share one weight vector, so a
  // layer count is a plain knapsack count: (tau_j + prod q)/prod p as the
  // single constant
  in.layer_fn = [&norm, &scheme, &opts](long j, double eps_mc, double delta_layer,
                                        std::uint64_t seed) {
    Rational tau = scheme.m * power_of(Rational(1) + scheme.eps0, j);
    TwoTermConstraint c;
    TwoTermConstraint::ExactForm ef;
    ef.A = (tau + scheme.prod_q) / scheme.prod_p;
    ef.B = Rational(0);
    c.A = to_double(ef.A);
    c.B = 0.0;
    for (std::size_t i = 0; i < norm.size(); ++i) {
      Rational wx = norm.p[i] / (1 - norm.p[i]);
      wx.canonicalize();
      double x = std::log(to_double(wx));
      if (x < 0) x = 0;
      c.x.push_back(x);
      c.y.push_back(-x);
      ef.wx.push_back(std::move(wx));
      ef.wz.push_back(Rational(1));
    }
    c.exact = std::move(ef);
    EngineOptions eopts;
    eopts.enum_threshold = opts.enum_threshold;
    eopts.ratio_bound_power = 1;
    return estimate_count(c, eps_mc, delta_layer, seed, eopts);
  };
  in.nonzero_fn = [&norm, &scheme, &opts](double eps_mc, double delta_layer, std::uint64_t seed) {
    return nonzero_upper_estimate(norm, scheme.prod_p, scheme.prod_q, eps_mc, delta_layer, seed,
                                  opts.enum_threshold);
  };

  out = run_layered(in, params, opts);
  out.dropped = dropped;
  out.flipped = mask;
  return out;
}

TvEstimate estimate_tv_distinct_q(const TvInstance& inst, const EstimatorParams& params,
                                  const FprasOptions& opts) {
  validate_params(params);
  {
    std::vector<Rational> distinct;
    for (std::size_t i = 0; i < inst.size(); ++i) {
      bool seen = false;
      for (const auto& v : distinct) seen = seen || v == inst.q[i];
      if (!seen) distinct.push_back(inst.q[i]);
    }
    if (distinct.size() > static_cast<std::size_t>(opts.distinct_q_cap)) {
      std::ostringstream os;
      os << "estimate_tv_distinct_q: " << distinct.size() << " distinct q values exceed cap "
         << opts.distinct_q_cap;
      throw MethodInapplicable(os.str());
    }
  }
  ensure_nondegenerate(inst.p, "estimate_tv_distinct_q");
  ensure_nondegenerate(inst.q, "estimate_tv_distinct_q");

  const std::size_t n0 = inst.size();
  std::vector<bool> mask(n0, false);
  for (std::size_t i = 0; i < n0; ++i) mask[i] = inst.p[i] < Rational(1, 2);
  TvInstance flipped = flip_coordinates(inst, mask);

  auto [norm, dropped] = normalize(flipped);
  TvEstimate out;
  out.flipped = mask;
  if (norm.size() == 0) {
    out.epsilon = params.epsilon;
    out.delta = params.delta;
    out.seed = params.seed;
    out.dropped = dropped;
    return out;
  }
  const std::size_t n = norm.size();

  // groups by exact q value
  std::vector<Rational> values;
  std::vector<int> group_of(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t g = 0; g < values.size(); ++g) {
      if (values[g] == norm.q[i]) group_of[i] = static_cast<int>(g);
    }
    if (group_of[i] < 0) {
      group_of[i] = static_cast<int>(values.size());
      values.push_back(norm.q[i]);
    }
  }
  const std::size_t k = values.size();
  std::vector<int> sizes(k, 0);
  for (int g : group_of) sizes[static_cast<std::size_t>(g)] += 1;

  bool halfcase_ok = true;
  for (std::size_t i = 0; i < n; ++i) halfcase_ok = halfcase_ok && norm.q[i] <= norm.p[i];

  LayeredInputs in;
  in.n = n;
  LayerScheme scheme;
  scheme.eps0 = params.epsilon / 3;
  scheme.floor_m = denominator_floor(norm);
  scheme.m = halfcase_ok ? min_contribution_formula(norm) : scheme.floor_m;
  scheme.U = 1 / scheme.m;
  scheme.u = layer_count_for(Rational(1) + scheme.eps0, scheme.U);
  scheme.prod_p = Rational(1);
  scheme.prod_q = Rational(1);
  for (std::size_t i = 0; i < n; ++i) {
    scheme.prod_p *= norm.p[i];
    scheme.prod_q *= norm.q[i];
  }
  in.scheme = scheme;

  std::vector<double> weights(n);
  std::vector<Rational> wx(n);
  for (std::size_t i = 0; i < n; ++i) {
    wx[i] = norm.p[i] / (1 - norm.p[i]);
    wx[i].canonicalize();
    weights[i] = std::max(0.0, std::log(to_double(wx[i])));
  }

  in.layer_fn = [&, weights](long j, double eps_mc, double delta_layer, std::uint64_t seed) {
    const Rational tau = in.scheme.m * power_of(Rational(1) + in.scheme.eps0, j);
    // iterate all per-group selected-count tuples s_g; each contributes a
    // grouped knapsack over the complement counts r_g = n_g - s_g
    std::vector<int> s_tuple(k, 0);
    CountEstimate agg;
    agg.exact = true;
    std::uint64_t tuple_ordinal = 0;
    for (;;) {
      Rational q_mass(1);
      for (std::size_t g = 0; g < k; ++g) {
        q_mass *= rational_pow(values[g], static_cast<unsigned long>(s_tuple[g])) *
                  rational_pow(1 - values[g], static_cast<unsigned long>(sizes[g] - s_tuple[g]));
      }
      Rational bound = (tau + q_mass) / in.scheme.prod_p;
      // single-term grouped count: sum_T w_i <= -ln(bound), |T cap g| = n_g - s_g
      double cap = -std::log(to_double(bound));
      std::vector<int> need(k);
      for (std::size_t g = 0; g < k; ++g) need[g] = sizes[g] - s_tuple[g];
      EngineOptions eopts;
      eopts.enum_threshold = opts.enum_threshold;
      eopts.ratio_bound_power = 1;
      CountEstimate part = count_knapsack_grouped(weights, cap, group_of, need, eps_mc,
                                                  delta_layer,
                                                  derive_seed(seed, static_cast<std::int64_t>(
                                                                        ++tuple_ordinal)),
                                                  eopts);
      agg.value += part.value;
      agg.discretized_total += part.discretized_total;
      agg.hits += part.hits;
      agg.samples += part.samples;
      agg.exact = agg.exact && part.exact;
      // next tuple
      std::size_t g = 0;
      while (g < k) {
        if (++s_tuple[g] <= sizes[g]) break;
        s_tuple[g] = 0;
        ++g;
      }
      if (g == k) break;
    }
    return agg;
  };

  if (halfcase_ok) {
    in.nonzero_fn = [&norm, scheme, &opts](double eps_mc, double delta_layer,
                                           std::uint64_t seed) {
      return nonzero_upper_estimate(norm, scheme.prod_p, scheme.prod_q, eps_mc, delta_layer,
                                    seed, opts.enum_threshold);
    };
  }

  out = run_layered(in, params, opts);
  out.dropped = dropped;
  out.flipped = mask;
  return out;
}

}  // namespace tvdist
