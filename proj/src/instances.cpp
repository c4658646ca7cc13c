#include "tvdist/instances.hpp"

#include <sstream>
#include <stdexcept>

namespace tvdist {

ProductDistribution::ProductDistribution(std::vector<Rational> marginals)
    : marginals_(std::move(marginals)) {
  for (std::size_t i = 0; i < marginals_.size(); ++i) {
    marginals_[i].canonicalize();
    if (marginals_[i] < 0 || marginals_[i] > 1) {
      std::ostringstream os;
      os << "marginal " << i << " = " << to_fraction_string(marginals_[i])
         << " outside [0,1]";
      throw std::invalid_argument(os.str());
    }
  }
}

Rational ProductDistribution::pmf(const std::vector<bool>& x) const {
  if (x.size() != marginals_.size())
    throw std::invalid_argument("pmf: bit-string length mismatch");
  Rational acc(1);
  for (std::size_t i = 0; i < x.size(); ++i)
    acc *= x[i] ? marginals_[i] : Rational(1) - marginals_[i];
  acc.canonicalize();
  return acc;
}

TvInstance::TvInstance(ProductDistribution p_in, ProductDistribution q_in)
    : p(std::move(p_in)), q(std::move(q_in)) {
  if (p.size() != q.size())
    throw std::invalid_argument("TvInstance: p and q have different lengths");
}

TvInstance flip_coordinates(const TvInstance& inst, const std::vector<bool>& mask) {
  if (mask.size() != inst.size())
    throw std::invalid_argument("flip_coordinates: mask length mismatch");
  std::vector<Rational> p, q;
  p.reserve(inst.size());
  q.reserve(inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    p.push_back(mask[i] ? Rational(1) - inst.p[i] : inst.p[i]);
    q.push_back(mask[i] ? Rational(1) - inst.q[i] : inst.q[i]);
  }
  return TvInstance(ProductDistribution(std::move(p)), ProductDistribution(std::move(q)));
}

std::pair<TvInstance, std::size_t> normalize(const TvInstance& inst) {
  std::vector<Rational> p, q;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (inst.p[i] == inst.q[i]) {
      ++dropped;
      continue;
    }
    p.push_back(inst.p[i]);
    q.push_back(inst.q[i]);
  }
  return {TvInstance(ProductDistribution(std::move(p)), ProductDistribution(std::move(q))),
          dropped};
}

std::string HalfcaseReport::to_string() const {
  if (ok) return "ok";
  std::ostringstream os;
  os << violations.size() << " offending coordinate(s):";
  for (const auto& v : violations) {
    os << " [" << v.index << "] " << v.reason
       << (v.flip_repairable ? " (repairable by flip)" : " (not repairable by flip)");
  }
  return os.str();
}

namespace {

bool halfcase_coord_ok(const Rational& p, const Rational& q) {
  return p >= Rational(1, 2) && p < 1 && q > 0 && q <= p;
}

}  // namespace

HalfcaseReport validate_halfcase(const TvInstance& inst) {
  HalfcaseReport report;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const Rational& p = inst.p[i];
    const Rational& q = inst.q[i];
    if (p == q) continue;  // dropped by normalize
    if (halfcase_coord_ok(p, q)) continue;
    HalfcaseViolation v;
    v.index = i;
    std::ostringstream os;
    os << "(p=" << to_fraction_string(p) << ", q=" << to_fraction_string(q) << ")";
    v.reason = os.str();
    v.flip_repairable = halfcase_coord_ok(Rational(1) - p, Rational(1) - q);
    report.violations.push_back(std::move(v));
    report.ok = false;
  }
  return report;
}

void validate_params(const EstimatorParams& params) {
  if (params.epsilon <= 0 || params.epsilon > 1)
    throw std::invalid_argument("epsilon must lie in (0, 1]");
  if (params.delta <= 0 || params.delta >= 1)
    throw std::invalid_argument("delta must lie in (0, 1)");
}

}  // namespace tvdist
