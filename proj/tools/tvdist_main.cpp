#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <thread>

#include "tvdist/errors.hpp"
#include "tvdist/fpras.hpp"
#include "tvdist/instances.hpp"
#include "tvdist/json_io.hpp"
#include "tvdist/oracle.hpp"
#include "tvdist/reductions.hpp"
#include "tvdist/twoterm.hpp"
#include "tvdist/version.hpp"

namespace {

using namespace tvdist;

constexpr int kExitParse = 2;
constexpr int kExitCap = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitInapplicable = 5;

std::uint64_t os_entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("TVDIST_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

Json layer_to_json(const LayerReport& layer) {
  Json j = Json::object();
  j["j"] = layer.j;
  j["threshold"] = layer.threshold;
  j["t_hat"] = layer.t_hat.value;
  j["discretized_total"] = layer.t_hat.discretized_total.get_str();
  j["hits"] = layer.t_hat.hits;
  j["samples"] = layer.t_hat.samples;
  j["exact"] = layer.t_hat.exact;
  return j;
}

void emit(const Json& report) { std::cout << report.dump(2) << "\n"; }

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

int cmd_exact(const std::string& input, std::size_t cap) {
  Timer timer;
  TvInstance inst = read_instance_file(input);
  Rational tv = oracle::exact_tv(inst, cap);
  Json report = Json::object();
  report["command"] = "exact";
  report["params"] = {{"input", input}, {"cap", cap}};
  report["result"] = tv.get_num().get_str() + "/" + tv.get_den().get_str();
  report["decimal"] = to_double(tv);
  report["elapsed_ms"] = timer.ms();
  report["version"] = kVersion;
  emit(report);
  return 0;
}

int cmd_estimate(const std::string& input, std::string method, double epsilon, double delta,
                 std::uint64_t seed, int threads) {
  Timer timer;
  TvInstance inst = read_instance_file(input);
  EstimatorParams params;
  params.epsilon = parse_rational(std::to_string(epsilon));
  params.delta = parse_rational(std::to_string(delta));
  params.seed = seed;
  FprasOptions opts;
  opts.threads = resolve_threads(threads);

  bool uniform_q = true;
  for (std::size_t i = 0; i < inst.size(); ++i)
    uniform_q = uniform_q && inst.q[i] == Rational(1, 2);
  std::size_t distinct = 0;
  {
    std::vector<Rational> seen;
    for (std::size_t i = 0; i < inst.size(); ++i) {
      bool found = false;
      for (const auto& v : seen) found = found || v == inst.q[i];
      if (!found) seen.push_back(inst.q[i]);
    }
    distinct = seen.size();
  }

  if (method == "auto") {
    if (uniform_q)
      method = "uniform";
    else if (validate_halfcase(inst).ok)
      method = "half";
    else if (distinct <= static_cast<std::size_t>(opts.distinct_q_cap))
      method = "distinct-q";
    else
      throw MethodInapplicable(
          "no estimator applies: q is non-uniform, the half-case "
          "precondition fails, and q takes too many distinct values");
  }

  TvEstimate est;
  if (method == "uniform") {
    if (!uniform_q) throw MethodInapplicable("estimate --method uniform: q is not uniform");
    est = estimate_tv_uniform(inst.p, params, opts);
  } else if (method == "half") {
    est = estimate_tv_halfcase(inst, params, opts);
  } else if (method == "distinct-q") {
    est = estimate_tv_distinct_q(inst, params, opts);
  } else {
    throw std::invalid_argument("unknown method: " + method);
  }

  Json report = Json::object();
  report["command"] = "estimate";
  report["params"] = {{"input", input},
                      {"method", method},
                      {"epsilon", epsilon},
                      {"delta", delta},
                      {"threads", opts.threads}};
  report["result"] = est.value;
  report["layers"] = Json::array();
  for (const auto& layer : est.layers) report["layers"].push_back(layer_to_json(layer));
  report["dropped"] = est.dropped;
  report["seed"] = seed;
  report["elapsed_ms"] = timer.ms();
  report["version"] = kVersion;
  emit(report);
  return 0;
}

int cmd_count_pmf_equals(const std::vector<std::string>& marginals, const std::string& value,
                         std::size_t cap) {
  Timer timer;
  std::vector<Rational> m;
  for (const auto& s : marginals) m.push_back(parse_rational(s));
  ProductDistribution d(std::move(m));
  Rational v = parse_rational(value);
  BigInt count = oracle::count_pmf_equals(d, v, cap);
  Json report = Json::object();
  report["command"] = "count";
  report["params"] = {{"what", "pmf-equals"}, {"v", value}};
  report["result"] = count.get_str();
  report["exact"] = true;
  report["elapsed_ms"] = timer.ms();
  report["version"] = kVersion;
  emit(report);
  return 0;
}

int cmd_count_subset_sum(const std::vector<long long>& weights, long long target,
                         std::size_t cap) {
  Timer timer;
  BigInt count = oracle::count_subset_sum({weights, target}, cap);
  Json report = Json::object();
  report["command"] = "count";
  report["params"] = {{"what", "subset-sum"}, {"weights", weights}, {"target", target}};
  report["result"] = count.get_str();
  report["exact"] = true;
  report["elapsed_ms"] = timer.ms();
  report["version"] = kVersion;
  emit(report);
  return 0;
}

int cmd_count_knapsack(const std::vector<double>& weights, double cap_value, double epsilon,
                       double delta, std::uint64_t seed) {
  Timer timer;
  CountEstimate est = count_knapsack(weights, cap_value, epsilon, delta, seed);
  Json report = Json::object();
  report["command"] = "count";
  report["params"] = {{"what", "knapsack"},
                      {"weights", weights},
                      {"cap", cap_value},
                      {"epsilon", epsilon},
                      {"delta", delta}};
  report["result"] = est.value;
  report["exact"] = est.exact;
  report["discretized_total"] = est.discretized_total.get_str();
  report["hits"] = est.hits;
  report["samples"] = est.samples;
  report["seed"] = seed;
  report["elapsed_ms"] = timer.ms();
  report["version"] = kVersion;
  emit(report);
  return 0;
}

Json bundle_meta(const reductions::ReductionBundle& bundle) {
  Json meta = Json::object();
  meta["case"] =
      bundle.which == reductions::ReductionBundle::Case::SmallV ? "small-v" : "large-v";
  meta["beta"] = to_fraction_string(bundle.beta);
  meta["v"] = to_fraction_string(bundle.v);
  return meta;
}

void emit_bundle(const ProductDistribution& p, const Rational& v, const std::string& out_dir,
                 std::size_t cap, Json& report) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  reductions::ReductionBundle bundle = reductions::pmf_equals_to_tv_instances(p, v);

  TvInstance hat(bundle.phat, bundle.qhat);
  TvInstance prime(bundle.pprime, bundle.qprime);
  write_instance_file((fs::path(out_dir) / "hat.json").string(), hat);
  write_instance_file((fs::path(out_dir) / "prime.json").string(), prime);
  Json meta = bundle_meta(bundle);
  {
    std::ofstream out(fs::path(out_dir) / "meta.json");
    out << meta.dump(2) << "\n";
  }
  report["files"] = {(fs::path(out_dir) / "hat.json").string(),
                     (fs::path(out_dir) / "prime.json").string(),
                     (fs::path(out_dir) / "meta.json").string()};
  report["meta"] = meta;

  if (prime.size() <= cap) {
    Rational tv_hat = oracle::exact_tv(hat, cap);
    Rational tv_prime = oracle::exact_tv(prime, cap);
    BigInt recovered = reductions::recover_count(bundle, tv_prime, tv_hat, p, v);
    report["recovered_count"] = recovered.get_str();
    report["pmf_equals_count"] = oracle::count_pmf_equals(p, v, cap).get_str();
  }
}

int cmd_gen_from_subset_sum(const std::vector<long long>& weights, long long target,
                            const std::string& out_dir, std::size_t cap) {
  Timer timer;
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto [p, v] = reductions::subset_sum_to_pmf_equals({weights, target});

  Json pmf_doc = Json::object();
  pmf_doc["p"] = distribution_to_json(p);
  pmf_doc["v"] = to_fraction_string(v);
  {
    std::ofstream out(fs::path(out_dir) / "pmf_equals.json");
    out << pmf_doc.dump(2) << "\n";
  }

  Json report = Json::object();
  report["command"] = "gen";
  report["params"] = {{"from-subset-sum", weights}, {"target", target}, {"out-dir", out_dir}};
  report["p"] = pmf_doc["p"];
  report["v"] = pmf_doc["v"];
  emit_bundle(p, v, out_dir, cap, report);
  if (weights.size() <= cap) {
    report["subset_sum_count"] = oracle::count_subset_sum({weights, target}, cap).get_str();
  }
  report["elapsed_ms"] = timer.ms();
  report["version"] = kVersion;
  emit(report);
  return 0;
}

int cmd_gen_bundle(const std::string& input, const std::string& value, const std::string& out_dir,
                   std::size_t cap) {
  Timer timer;
  std::ifstream in(input);
  if (!in) throw std::invalid_argument("cannot open file: " + input);
  Json doc;
  try {
    in >> doc;
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("bad JSON in " + input + ": " + e.what());
  }
  if (!doc.contains("p")) throw std::invalid_argument("expected a document with a \"p\" array");
  ProductDistribution p = distribution_from_json(doc.at("p"));
  Rational v = value.empty() && doc.contains("v")
                   ? parse_rational(doc.at("v").get<std::string>())
                   : parse_rational(value);

  Json report = Json::object();
  report["command"] = "gen";
  report["params"] = {{"pmf-equals-bundle", input},
                      {"v", to_fraction_string(v)},
                      {"out-dir", out_dir}};
  emit_bundle(p, v, out_dir, cap, report);
  report["elapsed_ms"] = timer.ms();
  report["version"] = kVersion;
  emit(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"total variation distance between Bernoulli product distributions"};
  app.require_subcommand(1);

  // exact
  auto* exact = app.add_subcommand("exact", "exact TV distance by enumeration");
  std::string exact_input;
  std::size_t exact_cap = oracle::kDefaultCap;
  exact->add_option("--input", exact_input, "instance JSON file")->required();
  exact->add_option("--cap", exact_cap, "enumeration cap on n");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "randomized (1 +- eps) TV estimate");
  std::string est_input, est_method = "auto";
  double est_eps = 0.1, est_delta = 0.05;
  std::uint64_t est_seed = 0;
  bool est_seed_set = false;
  int est_threads = 0;
  estimate->add_option("--input", est_input, "instance JSON file")->required();
  estimate->add_option("--method", est_method, "auto|half|uniform|distinct-q")
      ->check(CLI::IsMember({"auto", "half", "uniform", "distinct-q"}));
  estimate->add_option("--epsilon", est_eps, "relative accuracy in (0,1]");
  estimate->add_option("--delta", est_delta, "confidence error in (0,1)");
  estimate->add_option("--seed", est_seed, "RNG seed (default: OS entropy)")
      ->each([&est_seed_set](const std::string&) { est_seed_set = true; });
  estimate->add_option("--threads", est_threads, "worker threads (default: all cores)");

  // count
  auto* count = app.add_subcommand("count", "exact and approximate counters");
  std::string count_what;
  count->add_option("--what", count_what, "pmf-equals|subset-sum|knapsack")
      ->required()
      ->check(CLI::IsMember({"pmf-equals", "subset-sum", "knapsack"}));
  std::vector<std::string> count_marginals;
  std::string count_v;
  count->add_option("-p,--marginal", count_marginals, "marginal (repeatable, pmf-equals)");
  count->add_option("--v", count_v, "pmf value (pmf-equals)");
  std::vector<long long> count_weights_int;
  long long count_target = 0;
  count->add_option("-a,--weight-int", count_weights_int, "integer weight (subset-sum)");
  count->add_option("--target", count_target, "subset-sum target");
  std::vector<double> count_weights;
  double count_cap = 0.0;
  count->add_option("-w,--weight", count_weights, "real weight (knapsack)");
  count->add_option("--cap", count_cap, "knapsack capacity");
  double count_eps = 0.1, count_delta = 0.1;
  std::uint64_t count_seed = 0;
  bool count_seed_set = false;
  count->add_option("--epsilon", count_eps, "relative accuracy");
  count->add_option("--delta", count_delta, "confidence error");
  count->add_option("--seed", count_seed, "RNG seed")
      ->each([&count_seed_set](const std::string&) { count_seed_set = true; });
  std::size_t count_capn = oracle::kDefaultCap;
  count->add_option("--max-n", count_capn, "enumeration cap for exact counters");

  // gen
  auto* gen = app.add_subcommand("gen", "hardness-reduction instance generators");
  std::vector<long long> gen_weights;
  long long gen_target = 0;
  bool gen_target_set = false;
  std::string gen_bundle_input, gen_v, gen_out = ".";
  std::size_t gen_cap = oracle::kDefaultCap;
  gen->add_option("--from-subset-sum", gen_weights, "subset-sum weights");
  gen->add_option("--target", gen_target, "subset-sum target")
      ->each([&gen_target_set](const std::string&) { gen_target_set = true; });
  gen->add_option("--pmf-equals-bundle", gen_bundle_input, "pmf-equals instance file");
  gen->add_option("--v", gen_v, "pmf value");
  gen->add_option("--out-dir", gen_out, "output directory");
  gen->add_option("--cap", gen_cap, "oracle cap for the recovery check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (exact->parsed()) return cmd_exact(exact_input, exact_cap);
    if (estimate->parsed()) {
      if (!est_seed_set) est_seed = os_entropy_seed();
      return cmd_estimate(est_input, est_method, est_eps, est_delta, est_seed, est_threads);
    }
    if (count->parsed()) {
      if (!count_seed_set) count_seed = os_entropy_seed();
      if (count_what == "pmf-equals") {
        if (count_marginals.empty() || count_v.empty())
          throw std::invalid_argument("count --what pmf-equals needs -p ... and --v");
        return cmd_count_pmf_equals(count_marginals, count_v, count_capn);
      }
      if (count_what == "subset-sum") {
        if (count_weights_int.empty())
          throw std::invalid_argument("count --what subset-sum needs -a ...");
        return cmd_count_subset_sum(count_weights_int, count_target, count_capn);
      }
      return cmd_count_knapsack(count_weights, count_cap, count_eps, count_delta, count_seed);
    }
    if (gen->parsed()) {
      if (!gen_weights.empty() && gen_target_set)
        return cmd_gen_from_subset_sum(gen_weights, gen_target, gen_out, gen_cap);
      if (!gen_bundle_input.empty()) return cmd_gen_bundle(gen_bundle_input, gen_v, gen_out, gen_cap);
      throw std::invalid_argument(
          "gen needs either --from-subset-sum ... --target T or --pmf-equals-bundle FILE");
    }
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCap;
  } catch (const PreconditionViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const MethodInapplicable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInapplicable;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
