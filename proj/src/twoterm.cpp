#include "tvdist/twoterm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tvdist {

namespace {

constexpr long double kLogBandUpper = 8.0813061875216e-13L;  // log1p(2^-40)

long double safe_logl(double v) {
  if (v == 0.0) return -std::numeric_limits<long double>::infinity();
  return std::log(static_cast<long double>(v));
}

// e^{a} + e^{b} <= 1, band-inclusive, stable for any magnitudes.
// a or b may be -inf.
bool log_pair_leq_one(long double a, long double b) {
  long double hi = std::max(a, b), lo = std::min(a, b);
  if (std::isinf(hi) && hi < 0) return true;
  if (hi > 1.0L) return false;
  long double lhs = (std::isinf(lo) && lo < 0) ? hi : hi + std::log1p(std::exp(lo - hi));
  return lhs <= kLogBandUpper;
}

BigInt mpz_uniform_below(Rng& rng, const BigInt& bound) {
  const std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const std::size_t words = (bits + 63) / 64;
  std::vector<std::uint64_t> buf(words);
  BigInt r;
  const unsigned top_shift = (64 - bits % 64) % 64;
  for (;;) {
    for (auto& w : buf) w = rng.next();
    buf.back() >>= top_shift;
    mpz_import(r.get_mpz_t(), words, -1, sizeof(std::uint64_t), 0, 0, buf.data());
    if (r < bound) return r;
  }
}

template <typename Count>
Count uniform_below(Rng& rng, const Count& bound);

template <>
std::uint64_t uniform_below<std::uint64_t>(Rng& rng, const std::uint64_t& bound) {
  return rng.below(bound);
}

template <>
BigInt uniform_below<BigInt>(Rng& rng, const BigInt& bound) {
  return mpz_uniform_below(rng, bound);
}

BigInt u64_to_bigint(std::uint64_t v) {
  BigInt b;
  mpz_import(b.get_mpz_t(), 1, -1, sizeof(std::uint64_t), 0, 0, &v);
  return b;
}

}  // namespace

namespace detail {

// floor(tenn * x / w) as the exact floor of the real quotient of the two
// doubles: the cross products stay below 64 mantissa bits, so the long
// double comparisons in the correction loop are exact.
int exact_scaled_floor(int tenn, double x, double w) {
  if (x == w) return tenn;
  if (w == 0.0 || x == 0.0) return 0;
  long double r = static_cast<long double>(tenn) * x / w;
  long long k = static_cast<long long>(std::floor(r));
  while (static_cast<long double>(k) * w > static_cast<long double>(tenn) * x) --k;
  while (static_cast<long double>(k + 1) * w <= static_cast<long double>(tenn) * x) ++k;
  if (k < 0) k = 0;
  if (k > tenn) k = tenn;
  return static_cast<int>(k);
}

}  // namespace detail

std::vector<double> TwoTermConstraint::z() const {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return out;
}

void TwoTermConstraint::validate() const {
  if (x.size() != y.size()) throw std::invalid_argument("two-term constraint: |x| != |y|");
  if (A < 0 || B < 0) throw std::invalid_argument("two-term constraint: negative constant");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0)) throw std::invalid_argument("two-term constraint: x_i < 0");
    if (!(x[i] + y[i] >= 0)) throw std::invalid_argument("two-term constraint: x_i + y_i < 0");
  }
  if (exact) {
    if (exact->wx.size() != x.size() || exact->wz.size() != x.size())
      throw std::invalid_argument("two-term constraint: exact payload size mismatch");
  }
}

Verdict twoterm_membership(const TwoTermConstraint& c, const std::vector<std::size_t>& s) {
  long double sx = 0.0L, sz = 0.0L;
  for (std::size_t i : s) {
    sx += c.x[i];
    sz += c.x[i] + c.y[i];
  }
  long double lhs = static_cast<long double>(c.A) * std::exp(sx) +
                    static_cast<long double>(c.B) * std::exp(sz);
  long double diff = lhs - 1.0L;
  if ((diff < 0 ? -diff : diff) > kGuardBand) return lhs < 1.0L ? Verdict::In : Verdict::Out;
  if (!c.exact) return Verdict::Band;
  Rational first = c.exact->A;
  Rational second = c.exact->B;
  for (std::size_t i : s) {
    first *= c.exact->wx[i];
    second *= c.exact->wz[i];
  }
  first += second;
  return first <= 1 ? Verdict::In : Verdict::Out;
}

namespace detail {

// ---------------------------------------------------------------------------
// Per-class scaled problem for the two-term family.

struct ClassContext {
  std::vector<std::size_t> items;  // == key.sigma
  std::vector<int> xp, zp;
  std::vector<std::uint8_t> hit;  // bit0: attains W1, bit1: attains W2
  long double log_a = 0, log_b = 0;
  long double c1 = 0, c2 = 0;
  std::uint64_t radix = 0;

  bool feasible(int s1, int s2) const {
    return log_pair_leq_one(log_a + c1 * s1, log_b + c2 * s2);
  }
  std::uint64_t pack(int s1, int s2, int needs) const {
    return ((static_cast<std::uint64_t>(s1) * radix + static_cast<std::uint64_t>(s2)) << 2) |
           static_cast<std::uint64_t>(needs);
  }
  void unpack(std::uint64_t key, int& s1, int& s2, int& needs) const {
    needs = static_cast<int>(key & 3);
    const std::uint64_t s12 = key >> 2;
    s2 = static_cast<int>(s12 % radix);
    s1 = static_cast<int>(s12 / radix);
  }
};

ClassContext make_context(long double log_a, long double log_b, const std::vector<double>& x,
                          const std::vector<double>& z, const ClassKey& key) {
  const int tenn = 10 * static_cast<int>(x.size());
  ClassContext ctx;
  ctx.items = key.sigma;
  ctx.log_a = log_a;
  ctx.log_b = log_b;
  ctx.c1 = key.W1 > 0 ? static_cast<long double>(key.W1) / tenn : 0.0L;
  ctx.c2 = key.W2 > 0 ? static_cast<long double>(key.W2) / tenn : 0.0L;
  std::uint64_t s2max = 0;
  for (std::size_t i : key.sigma) {
    int a = key.W1 > 0 ? exact_scaled_floor(tenn, x[i], key.W1) : 0;
    int b = key.W2 > 0 ? exact_scaled_floor(tenn, z[i], key.W2) : 0;
    ctx.xp.push_back(a);
    ctx.zp.push_back(b);
    std::uint8_t h = 0;
    if (x[i] == key.W1) h |= 1;
    if (z[i] == key.W2) h |= 2;
    ctx.hit.push_back(h);
    s2max += static_cast<std::uint64_t>(b);
  }
  ctx.radix = s2max + 1;
  return ctx;
}

template <typename Count>
struct ClassTables {
  std::vector<std::vector<std::uint64_t>> keys;  // sorted per level
  std::vector<std::vector<Count>> vals;
  // per level k >= 1: positions of the exclude/include children in level
  // k-1, -1 when the include child was pruned
  std::vector<std::vector<std::int32_t>> exc_idx;
  std::vector<std::vector<std::int32_t>> inc_idx;

  std::int32_t position(std::size_t level, std::uint64_t key) const {
    const auto& ks = keys[level];
    auto it = std::lower_bound(ks.begin(), ks.end(), key);
    if (it == ks.end() || *it != key) return -1;
    return static_cast<std::int32_t>(it - ks.begin());
  }
  const Count* find(std::size_t level, std::uint64_t key) const {
    std::int32_t pos = position(level, key);
    return pos < 0 ? nullptr : &vals[level][static_cast<std::size_t>(pos)];
  }
};

// Level k holds counts of subsets of items[0..k-1] given the sums committed
// by items[k..L-1] and the maxima still to attain; infeasible committed
// states are pruned since the family is downward closed.
template <typename Count>
ClassTables<Count> build_tables(const ClassContext& ctx) {
  const std::size_t levels = ctx.items.size();
  ClassTables<Count> t;
  t.keys.resize(levels + 1);
  t.vals.resize(levels + 1);
  t.keys[levels] = {ctx.pack(0, 0, 3)};

  for (std::size_t k = levels; k-- > 0;) {
    const auto& src = t.keys[k + 1];
    auto& dst = t.keys[k];
    dst = src;
    const int xp = ctx.xp[k], zp = ctx.zp[k];
    const int clear = ~static_cast<int>(ctx.hit[k]);
    for (std::uint64_t key : src) {
      int s1, s2, needs;
      ctx.unpack(key, s1, s2, needs);
      if (ctx.feasible(s1 + xp, s2 + zp)) dst.push_back(ctx.pack(s1 + xp, s2 + zp, needs & clear));
    }
    std::sort(dst.begin(), dst.end());
    dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
  }

  t.vals[0].resize(t.keys[0].size());
  for (std::size_t i = 0; i < t.keys[0].size(); ++i) {
    int s1, s2, needs;
    ctx.unpack(t.keys[0][i], s1, s2, needs);
    bool ok = needs == 0 && ctx.feasible(s1, s2);
    t.vals[0][i] = ok ? Count(1) : Count(0);
  }
  t.exc_idx.resize(levels + 1);
  t.inc_idx.resize(levels + 1);
  for (std::size_t k = 1; k <= levels; ++k) {
    const int xp = ctx.xp[k - 1], zp = ctx.zp[k - 1];
    const int clear = ~static_cast<int>(ctx.hit[k - 1]);
    t.vals[k].resize(t.keys[k].size());
    t.exc_idx[k].resize(t.keys[k].size());
    t.inc_idx[k].resize(t.keys[k].size());
    for (std::size_t i = 0; i < t.keys[k].size(); ++i) {
      const std::uint64_t key = t.keys[k][i];
      int s1, s2, needs;
      ctx.unpack(key, s1, s2, needs);
      const std::int32_t ei = t.position(k - 1, key);
      const std::int32_t ii = t.position(k - 1, ctx.pack(s1 + xp, s2 + zp, needs & clear));
      t.exc_idx[k][i] = ei;
      t.inc_idx[k][i] = ii;
      Count v = 0;
      if (ei >= 0) v = t.vals[k - 1][static_cast<std::size_t>(ei)];
      if (ii >= 0) v += t.vals[k - 1][static_cast<std::size_t>(ii)];
      t.vals[k][i] = v;
    }
  }
  return t;
}

template <typename Count>
Count class_total(const ClassTables<Count>& t, const ClassContext& ctx) {
  const Count* p = t.find(ctx.items.size(), ctx.pack(0, 0, 3));
  return p ? *p : Count(0);
}

template <typename Count>
std::vector<std::size_t> walk_sample(const ClassTables<Count>& t, const ClassContext& ctx,
                                     Rng& rng) {
  std::vector<std::size_t> out;
  const std::size_t levels = ctx.items.size();
  std::int32_t pos = t.position(levels, ctx.pack(0, 0, 3));
  Count cur = pos < 0 ? Count(0) : t.vals[levels][static_cast<std::size_t>(pos)];
  for (std::size_t k = levels; k-- > 0;) {
    const std::int32_t ii = t.inc_idx[k + 1][static_cast<std::size_t>(pos)];
    const std::int32_t ei = t.exc_idx[k + 1][static_cast<std::size_t>(pos)];
    Count inc = ii < 0 ? Count(0) : t.vals[k][static_cast<std::size_t>(ii)];
    Count r = uniform_below<Count>(rng, cur);
    if (r < inc) {
      out.push_back(ctx.items[k]);
      pos = ii;
      cur = inc;
    } else {
      pos = ei;
      cur -= inc;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Table-free depth-first enumeration of class members; near output-sensitive
// thanks to the feasibility and attainability pruning.
bool class_enumerate(const ClassContext& ctx,
                     const std::function<bool(const std::vector<std::size_t>&)>& visit) {
  const std::size_t levels = ctx.items.size();
  std::vector<std::uint8_t> avail(levels + 1, 0);
  for (std::size_t k = 0; k < levels; ++k)
    avail[k + 1] = static_cast<std::uint8_t>(avail[k] | ctx.hit[k]);

  std::vector<std::size_t> chosen;
  std::vector<std::size_t> member;
  std::function<bool(std::size_t, int, int, int)> dfs = [&](std::size_t k, int s1, int s2,
                                                            int needs) -> bool {
    if ((needs & ~static_cast<int>(avail[k])) != 0) return true;
    if (k == 0) {
      if (needs != 0) return true;
      member.assign(chosen.rbegin(), chosen.rend());
      return visit(member);
    }
    if (!dfs(k - 1, s1, s2, needs)) return false;
    const int ns1 = s1 + ctx.xp[k - 1], ns2 = s2 + ctx.zp[k - 1];
    if (ctx.feasible(ns1, ns2)) {
      chosen.push_back(ctx.items[k - 1]);
      bool cont = dfs(k - 1, ns1, ns2, needs & ~static_cast<int>(ctx.hit[k - 1]));
      chosen.pop_back();
      if (!cont) return false;
    }
    return true;
  };
  return dfs(levels, 0, 0, 3);
}

std::vector<ClassKey> decompose(const std::vector<double>& x, const std::vector<double>& z) {
  std::vector<double> vx = x, vz = z;
  std::sort(vx.begin(), vx.end());
  vx.erase(std::unique(vx.begin(), vx.end()), vx.end());
  std::sort(vz.begin(), vz.end());
  vz.erase(std::unique(vz.begin(), vz.end()), vz.end());

  std::vector<ClassKey> keys;
  for (double w1 : vx) {
    for (double w2 : vz) {
      ClassKey key;
      key.W1 = w1;
      key.W2 = w2;
      bool has_r1 = false, has_r2 = false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > w1 || z[i] > w2) continue;
        key.sigma.push_back(i);
        if (x[i] == w1) {
          if (!has_r1) key.ell1 = i;
          has_r1 = true;
          key.r1.push_back(i);
        }
        if (z[i] == w2) {
          if (!has_r2) key.ell = i;
          has_r2 = true;
          key.r2.push_back(i);
        }
      }
      if (has_r1 && has_r2) keys.push_back(std::move(key));
    }
  }
  return keys;
}

// ---------------------------------------------------------------------------
// Family over all classes plus the empty set (count-type erased). DP tables
// are built on demand; totals can be resolved by bounded enumeration first.

class FamilyImpl {
 public:
  virtual ~FamilyImpl() = default;
  virtual const BigInt& total() = 0;
  virtual bool contains_empty() const = 0;
  virtual std::vector<ClassCount> classes() = 0;
  // Number of members when it is at most `budget`, nullopt otherwise.
  // Does not build DP tables.
  virtual std::optional<std::int64_t> bounded_size(std::int64_t budget) = 0;
  virtual std::vector<std::size_t> sample(Rng& rng) = 0;
  virtual std::vector<std::size_t> sample_class_member(std::size_t ordinal, Rng& rng) = 0;
  virtual bool enumerate(const std::function<bool(const std::vector<std::size_t>&)>& v) const = 0;
};

template <typename Count>
class TwoTermFamily final : public FamilyImpl {
 public:
  TwoTermFamily(long double log_a, long double log_b, const std::vector<double>& x,
                const std::vector<double>& z) {
    keys_ = decompose(x, z);
    contexts_.reserve(keys_.size());
    for (const ClassKey& key : keys_) contexts_.push_back(make_context(log_a, log_b, x, z, key));
    empty_in_ = log_pair_leq_one(log_a, log_b);
  }

  const BigInt& total() override {
    ensure_tables();
    return total_;
  }

  bool contains_empty() const override { return empty_in_; }

  std::vector<ClassCount> classes() override {
    ensure_tables();
    std::vector<ClassCount> out;
    out.reserve(live_.size());
    for (std::size_t pos = 0; pos < live_.size(); ++pos)
      out.push_back({keys_[live_[pos]], to_bigint(counts_[pos])});
    return out;
  }

  std::optional<std::int64_t> bounded_size(std::int64_t budget) override {
    std::int64_t seen = empty_in_ ? 1 : 0;
    if (seen > budget) return std::nullopt;
    for (const auto& ctx : contexts_) {
      bool ok = class_enumerate(ctx, [&](const std::vector<std::size_t>&) {
        ++seen;
        return seen <= budget;
      });
      if (!ok) return std::nullopt;
    }
    return seen;
  }

  std::vector<std::size_t> sample(Rng& rng) override {
    ensure_tables();
    Count r = uniform_below<Count>(rng, total_count_);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    std::size_t pos = static_cast<std::size_t>(it - cumulative_.begin());
    if (pos == live_.size()) return {};
    std::size_t ci = live_[pos];
    return walk_sample(tables_[ci], contexts_[ci], rng);
  }

  std::vector<std::size_t> sample_class_member(std::size_t ordinal, Rng& rng) override {
    ensure_tables();
    std::size_t ci = live_[ordinal];
    return walk_sample(tables_[ci], contexts_[ci], rng);
  }

  bool enumerate(const std::function<bool(const std::vector<std::size_t>&)>& v) const override {
    if (empty_in_) {
      std::vector<std::size_t> empty;
      if (!v(empty)) return false;
    }
    for (const auto& ctx : contexts_) {
      if (!class_enumerate(ctx, v)) return false;
    }
    return true;
  }

 private:
  static BigInt to_bigint(const std::uint64_t& v) { return u64_to_bigint(v); }
  static BigInt to_bigint(const BigInt& v) { return v; }

  void ensure_tables() {
    if (tables_ready_) return;
    tables_.resize(contexts_.size());
    Count run = 0;
    for (std::size_t ci = 0; ci < contexts_.size(); ++ci) {
      tables_[ci] = build_tables<Count>(contexts_[ci]);
      Count n = class_total(tables_[ci], contexts_[ci]);
      if (n == Count(0)) {
        tables_[ci] = ClassTables<Count>();
        continue;
      }
      live_.push_back(ci);
      counts_.push_back(n);
      run += n;
      cumulative_.push_back(run);
    }
    total_count_ = run;
    if (empty_in_) total_count_ += Count(1);
    total_ = to_bigint(total_count_);
    tables_ready_ = true;
  }

  std::vector<ClassKey> keys_;
  std::vector<ClassContext> contexts_;
  std::vector<ClassTables<Count>> tables_;
  std::vector<std::size_t> live_;  // contexts with nonzero count
  std::vector<Count> counts_;      // aligned with live_
  std::vector<Count> cumulative_;
  Count total_count_ = 0;
  bool empty_in_ = false;
  bool tables_ready_ = false;
  BigInt total_;
};

std::unique_ptr<FamilyImpl> make_twoterm_family(long double log_a, long double log_b,
                                                const std::vector<double>& x,
                                                const std::vector<double>& z) {
  if (x.size() <= 62) return std::make_unique<TwoTermFamily<std::uint64_t>>(log_a, log_b, x, z);
  return std::make_unique<TwoTermFamily<BigInt>>(log_a, log_b, x, z);
}

// ---------------------------------------------------------------------------
// Single-term family with exact per-group selection counts.

struct GroupedContext {
  std::vector<std::size_t> items;
  std::vector<int> xp;
  std::vector<std::uint8_t> hit;       // attains W1
  std::vector<int> group;              // group id per pool position
  std::vector<std::uint64_t> gradix;   // mixed-radix multiplier per group
  std::vector<std::uint64_t> radices;  // r_g + 1 per group
  std::uint64_t gtotal = 1;
  std::uint64_t start_code = 0;  // code of the full requirement vector
  long double log_a = 0;
  long double c1 = 0;

  bool feasible(int s1) const { return log_a + c1 * s1 <= kLogBandUpper; }
  std::uint64_t digit_at(std::uint64_t gcode, std::size_t k) const {
    const std::size_t g = static_cast<std::size_t>(group[k]);
    return (gcode / gradix[g]) % radices[g];
  }
  std::uint64_t pack(int s1, std::uint64_t gcode, int need) const {
    return ((static_cast<std::uint64_t>(s1) * gtotal + gcode) << 1) |
           static_cast<std::uint64_t>(need);
  }
  void unpack(std::uint64_t key, int& s1, std::uint64_t& gcode, int& need) const {
    need = static_cast<int>(key & 1);
    const std::uint64_t rest = key >> 1;
    gcode = rest % gtotal;
    s1 = static_cast<int>(rest / gtotal);
  }
};

template <typename Count>
struct GroupedTables {
  std::vector<std::vector<std::uint64_t>> keys;
  std::vector<std::vector<Count>> vals;
  const Count* find(std::size_t level, std::uint64_t key) const {
    const auto& ks = keys[level];
    auto it = std::lower_bound(ks.begin(), ks.end(), key);
    if (it == ks.end() || *it != key) return nullptr;
    return &vals[level][static_cast<std::size_t>(it - ks.begin())];
  }
};

// gcode carries how many items each group still requires; including an item
// decrements its group's digit and is forbidden at digit 0.
template <typename Count>
GroupedTables<Count> build_grouped_tables(const GroupedContext& ctx) {
  const std::size_t levels = ctx.items.size();
  GroupedTables<Count> t;
  t.keys.resize(levels + 1);
  t.vals.resize(levels + 1);
  t.keys[levels] = {ctx.pack(0, ctx.start_code, 1)};

  for (std::size_t k = levels; k-- > 0;) {
    const auto& src = t.keys[k + 1];
    auto& dst = t.keys[k];
    dst = src;
    const int xp = ctx.xp[k];
    const std::uint64_t gr = ctx.gradix[static_cast<std::size_t>(ctx.group[k])];
    const int clear = ctx.hit[k] ? 0 : 1;
    for (std::uint64_t key : src) {
      int s1, need;
      std::uint64_t gcode;
      ctx.unpack(key, s1, gcode, need);
      if (ctx.digit_at(gcode, k) == 0) continue;
      if (!ctx.feasible(s1 + xp)) continue;
      dst.push_back(ctx.pack(s1 + xp, gcode - gr, need & clear));
    }
    std::sort(dst.begin(), dst.end());
    dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
  }

  t.vals[0].resize(t.keys[0].size());
  for (std::size_t i = 0; i < t.keys[0].size(); ++i) {
    int s1, need;
    std::uint64_t gcode;
    ctx.unpack(t.keys[0][i], s1, gcode, need);
    bool ok = need == 0 && gcode == 0 && ctx.feasible(s1);
    t.vals[0][i] = ok ? Count(1) : Count(0);
  }
  for (std::size_t k = 1; k <= levels; ++k) {
    const int xp = ctx.xp[k - 1];
    const std::uint64_t gr = ctx.gradix[static_cast<std::size_t>(ctx.group[k - 1])];
    const int clear = ctx.hit[k - 1] ? 0 : 1;
    t.vals[k].resize(t.keys[k].size());
    for (std::size_t i = 0; i < t.keys[k].size(); ++i) {
      int s1, need;
      std::uint64_t gcode;
      ctx.unpack(t.keys[k][i], s1, gcode, need);
      Count v = 0;
      if (const Count* p = t.find(k - 1, t.keys[k][i])) v = *p;
      if (ctx.digit_at(gcode, k - 1) != 0 && ctx.feasible(s1 + xp)) {
        if (const Count* p = t.find(k - 1, ctx.pack(s1 + xp, gcode - gr, need & clear))) v += *p;
      }
      t.vals[k][i] = v;
    }
  }
  return t;
}

template <typename Count>
Count grouped_total(const GroupedTables<Count>& t, const GroupedContext& ctx) {
  const Count* p = t.find(ctx.items.size(), ctx.pack(0, ctx.start_code, 1));
  return p ? *p : Count(0);
}

template <typename Count>
std::vector<std::size_t> grouped_walk(const GroupedTables<Count>& t, const GroupedContext& ctx,
                                      Rng& rng) {
  std::vector<std::size_t> out;
  int s1 = 0, need = 1;
  std::uint64_t gcode = ctx.start_code;
  Count cur = grouped_total(t, ctx);
  for (std::size_t k = ctx.items.size(); k-- > 0;) {
    const std::uint64_t gr = ctx.gradix[static_cast<std::size_t>(ctx.group[k])];
    Count inc = 0;
    const int ns1 = s1 + ctx.xp[k];
    const int nneed = ctx.hit[k] ? 0 : need;
    if (ctx.digit_at(gcode, k) != 0 && ctx.feasible(ns1)) {
      if (const Count* p = t.find(k, ctx.pack(ns1, gcode - gr, nneed))) inc = *p;
    }
    Count r = uniform_below<Count>(rng, cur);
    if (r < inc) {
      out.push_back(ctx.items[k]);
      s1 = ns1;
      gcode -= gr;
      need = nneed;
      cur = inc;
    } else {
      cur -= inc;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool grouped_enumerate(const GroupedContext& ctx,
                       const std::function<bool(const std::vector<std::size_t>&)>& visit) {
  const std::size_t levels = ctx.items.size();
  const std::size_t ngroups = ctx.gradix.size();
  std::vector<std::uint8_t> avail(levels + 1, 0);
  for (std::size_t k = 0; k < levels; ++k)
    avail[k + 1] = static_cast<std::uint8_t>(avail[k] | ctx.hit[k]);
  std::vector<std::vector<int>> supply(levels + 1, std::vector<int>(ngroups, 0));
  for (std::size_t k = 0; k < levels; ++k) {
    supply[k + 1] = supply[k];
    supply[k + 1][static_cast<std::size_t>(ctx.group[k])] += 1;
  }

  std::vector<std::size_t> chosen;
  std::vector<std::size_t> member;

  std::function<bool(std::size_t, int, std::uint64_t, int)> dfs =
      [&](std::size_t k, int s1, std::uint64_t gcode, int need) -> bool {
    if (need != 0 && avail[k] == 0) return true;
    std::uint64_t rest = gcode;
    for (std::size_t g = ngroups; g-- > 0;) {
      const std::uint64_t digit = rest / ctx.gradix[g];
      rest %= ctx.gradix[g];
      if (digit > static_cast<std::uint64_t>(supply[k][g])) return true;
    }
    if (k == 0) {
      if (need != 0 || gcode != 0) return true;
      member.assign(chosen.rbegin(), chosen.rend());
      return visit(member);
    }
    if (!dfs(k - 1, s1, gcode, need)) return false;
    const std::uint64_t gr = ctx.gradix[static_cast<std::size_t>(ctx.group[k - 1])];
    const int ns1 = s1 + ctx.xp[k - 1];
    if (ctx.digit_at(gcode, k - 1) != 0 && ctx.feasible(ns1)) {
      chosen.push_back(ctx.items[k - 1]);
      bool cont = dfs(k - 1, ns1, gcode - gr, ctx.hit[k - 1] ? 0 : need);
      chosen.pop_back();
      if (!cont) return false;
    }
    return true;
  };
  return dfs(levels, 0, ctx.start_code, 1);
}

template <typename Count>
class GroupedFamily final : public FamilyImpl {
 public:
  GroupedFamily(long double log_a, const std::vector<double>& w, const std::vector<int>& group_of,
                const std::vector<int>& r) {
    const std::size_t n = w.size();
    const int tenn = 10 * static_cast<int>(n);
    const std::size_t ngroups = r.size();

    std::vector<double> values = w;
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    std::vector<std::uint64_t> gradix(ngroups, 1), radices(ngroups, 1);
    std::uint64_t gtotal = 1, start = 0;
    for (std::size_t g = 0; g < ngroups; ++g) {
      gradix[g] = gtotal;
      radices[g] = static_cast<std::uint64_t>(r[g]) + 1;
      gtotal *= radices[g];
    }
    for (std::size_t g = 0; g < ngroups; ++g)
      start += static_cast<std::uint64_t>(r[g]) * gradix[g];

    for (double w1 : values) {
      GroupedContext ctx;
      ctx.gradix = gradix;
      ctx.radices = radices;
      ctx.gtotal = gtotal;
      ctx.start_code = start;
      ctx.log_a = log_a;
      ctx.c1 = w1 > 0 ? static_cast<long double>(w1) / tenn : 0.0L;
      bool has_max = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (w[i] > w1) continue;
        ctx.items.push_back(i);
        ctx.xp.push_back(w1 > 0 ? exact_scaled_floor(tenn, w[i], w1) : 0);
        ctx.hit.push_back(w[i] == w1 ? 1 : 0);
        ctx.group.push_back(group_of[i]);
        if (w[i] == w1) has_max = true;
      }
      if (!has_max) continue;
      contexts_.push_back(std::move(ctx));
    }
  }

  const BigInt& total() override {
    ensure_tables();
    return total_;
  }

  bool contains_empty() const override { return false; }

  std::vector<ClassCount> classes() override {
    ensure_tables();
    std::vector<ClassCount> out;
    for (std::size_t pos = 0; pos < live_.size(); ++pos) {
      ClassCount cc;
      cc.key.sigma = contexts_[live_[pos]].items;
      cc.n = to_bigint(counts_[pos]);
      out.push_back(std::move(cc));
    }
    return out;
  }

  std::optional<std::int64_t> bounded_size(std::int64_t budget) override {
    std::int64_t seen = 0;
    for (const auto& ctx : contexts_) {
      bool ok = grouped_enumerate(ctx, [&](const std::vector<std::size_t>&) {
        ++seen;
        return seen <= budget;
      });
      if (!ok) return std::nullopt;
    }
    return seen;
  }

  std::vector<std::size_t> sample(Rng& rng) override {
    ensure_tables();
    Count r = uniform_below<Count>(rng, total_count_);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    std::size_t pos = static_cast<std::size_t>(it - cumulative_.begin());
    std::size_t ci = live_[pos];
    return grouped_walk(tables_[ci], contexts_[ci], rng);
  }

  std::vector<std::size_t> sample_class_member(std::size_t ordinal, Rng& rng) override {
    ensure_tables();
    std::size_t ci = live_[ordinal];
    return grouped_walk(tables_[ci], contexts_[ci], rng);
  }

  bool enumerate(const std::function<bool(const std::vector<std::size_t>&)>& v) const override {
    for (const auto& ctx : contexts_) {
      if (!grouped_enumerate(ctx, v)) return false;
    }
    return true;
  }

 private:
  static BigInt to_bigint(const std::uint64_t& v) { return u64_to_bigint(v); }
  static BigInt to_bigint(const BigInt& v) { return v; }

  void ensure_tables() {
    if (tables_ready_) return;
    tables_.resize(contexts_.size());
    Count run = 0;
    for (std::size_t ci = 0; ci < contexts_.size(); ++ci) {
      tables_[ci] = build_grouped_tables<Count>(contexts_[ci]);
      Count n = grouped_total(tables_[ci], contexts_[ci]);
      if (n == Count(0)) {
        tables_[ci] = GroupedTables<Count>();
        continue;
      }
      live_.push_back(ci);
      counts_.push_back(n);
      run += n;
      cumulative_.push_back(run);
    }
    total_count_ = run;
    total_ = to_bigint(run);
    tables_ready_ = true;
  }

  std::vector<GroupedContext> contexts_;
  std::vector<GroupedTables<Count>> tables_;
  std::vector<std::size_t> live_;
  std::vector<Count> counts_;
  std::vector<Count> cumulative_;
  Count total_count_ = 0;
  bool tables_ready_ = false;
  BigInt total_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Public surface.

DiscretizedFamily::DiscretizedFamily(const TwoTermConstraint& c) {
  c.validate();
  impl_ = detail::make_twoterm_family(safe_logl(c.A), safe_logl(c.B), c.x, c.z());
  impl_->total();  // finalize tables so const sampling is thread-safe
}
DiscretizedFamily::~DiscretizedFamily() = default;
DiscretizedFamily::DiscretizedFamily(DiscretizedFamily&&) noexcept = default;
DiscretizedFamily& DiscretizedFamily::operator=(DiscretizedFamily&&) noexcept = default;

const BigInt& DiscretizedFamily::total() const { return impl_->total(); }
bool DiscretizedFamily::contains_empty() const { return impl_->contains_empty(); }
std::vector<ClassCount> DiscretizedFamily::classes() const { return impl_->classes(); }
std::vector<std::size_t> DiscretizedFamily::sample(Rng& rng) const { return impl_->sample(rng); }
std::vector<std::size_t> DiscretizedFamily::sample_class_member(std::size_t ordinal,
                                                                Rng& rng) const {
  return impl_->sample_class_member(ordinal, rng);
}
bool DiscretizedFamily::enumerate(
    const std::function<bool(const std::vector<std::size_t>&)>& visit) const {
  return impl_->enumerate(visit);
}

std::vector<std::size_t> sample_discretized(const DiscretizedFamily& family, Rng& rng) {
  return family.sample(rng);
}

DiscretizedWeights discretize(const TwoTermConstraint& c, const ClassKey& key) {
  c.validate();
  const int tenn = 10 * static_cast<int>(c.size());
  DiscretizedWeights out;
  const std::vector<double> z = c.z();
  for (std::size_t i : key.sigma) {
    out.xprime.push_back(key.W1 > 0 ? detail::exact_scaled_floor(tenn, c.x[i], key.W1) : 0);
    out.zprime.push_back(key.W2 > 0 ? detail::exact_scaled_floor(tenn, z[i], key.W2) : 0);
  }
  return out;
}

BigInt CountTable::lookup(std::size_t level, int s1, int s2, int needs) const {
  const std::uint64_t key =
      ((static_cast<std::uint64_t>(s1) * pack_s2 + static_cast<std::uint64_t>(s2)) << 2) |
      static_cast<std::uint64_t>(needs);
  const auto& lv = levels[level];
  auto it = std::lower_bound(lv.begin(), lv.end(), key,
                             [](const Entry& e, std::uint64_t k) { return e.key < k; });
  if (it == lv.end() || it->key != key) return 0;
  return it->count;
}

std::pair<CountTable, BigInt> count_discretized(const TwoTermConstraint& c, const ClassKey& key) {
  c.validate();
  detail::ClassContext ctx = detail::make_context(safe_logl(c.A), safe_logl(c.B), c.x, c.z(), key);
  auto tables = detail::build_tables<BigInt>(ctx);
  CountTable out;
  out.pack_s2 = ctx.radix;
  out.levels.resize(tables.keys.size());
  for (std::size_t k = 0; k < tables.keys.size(); ++k) {
    out.levels[k].reserve(tables.keys[k].size());
    for (std::size_t i = 0; i < tables.keys[k].size(); ++i)
      out.levels[k].push_back({tables.keys[k][i], tables.vals[k][i]});
  }
  return {std::move(out), detail::class_total(tables, ctx)};
}

std::vector<ClassCount> enumerate_classes(const TwoTermConstraint& c) {
  c.validate();
  const std::vector<double> z = c.z();
  std::vector<ClassCount> out;
  for (const ClassKey& key : detail::decompose(c.x, z)) {
    detail::ClassContext ctx = detail::make_context(safe_logl(c.A), safe_logl(c.B), c.x, z, key);
    auto tables = detail::build_tables<BigInt>(ctx);
    BigInt n = detail::class_total(tables, ctx);
    if (n > 0) out.push_back({key, n});
  }
  return out;
}

namespace {

std::int64_t chernoff_samples(std::size_t n, int power, double epsilon, double delta) {
  double bound = 1.0;
  for (int i = 0; i < power; ++i) bound *= static_cast<double>(n + 1);
  double t = std::ceil(3.0 * bound * std::log(2.0 / delta) / (epsilon * epsilon));
  if (t < 1) t = 1;
  return static_cast<std::int64_t>(t);
}

CountEstimate run_estimate(detail::FamilyImpl& family,
                           const std::function<bool(const std::vector<std::size_t>&)>& member,
                           std::size_t n, double epsilon, double delta, std::uint64_t seed,
                           const EngineOptions& opts, int ratio_power) {
  CountEstimate est;

  if (opts.enum_threshold > 0) {
    if (auto size = family.bounded_size(opts.enum_threshold)) {
      std::int64_t hits = 0;
      family.enumerate([&](const std::vector<std::size_t>& s) {
        if (member(s)) ++hits;
        return true;
      });
      est.discretized_total = *size;
      est.value = static_cast<double>(hits);
      est.hits = hits;
      est.samples = *size;
      est.exact = true;
      return est;
    }
  }

  est.discretized_total = family.total();
  if (est.discretized_total == 0) {
    est.exact = true;
    return est;
  }

  const std::int64_t t = chernoff_samples(n, ratio_power, epsilon, delta);
  const auto classes = family.classes();

  // Draw-to-class allocation from a dedicated stream, then per-class streams;
  // the outcome does not depend on scheduling.
  std::vector<std::int64_t> alloc(classes.size() + 1, 0);
  Rng master(derive_seed(seed, -1));
  if (est.discretized_total <= u64_to_bigint(std::uint64_t(1) << 62)) {
    std::vector<std::uint64_t> cumulative;
    cumulative.reserve(classes.size());
    std::uint64_t run = 0;
    for (const auto& cc : classes) {
      run += cc.n.get_ui();
      cumulative.push_back(run);
    }
    const std::uint64_t total = est.discretized_total.get_ui();
    for (std::int64_t s = 0; s < t; ++s) {
      std::uint64_t r = master.below(total);
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
      alloc[static_cast<std::size_t>(it - cumulative.begin())] += 1;
    }
  } else {
    std::vector<BigInt> cumulative;
    cumulative.reserve(classes.size());
    BigInt run = 0;
    for (const auto& cc : classes) {
      run += cc.n;
      cumulative.push_back(run);
    }
    for (std::int64_t s = 0; s < t; ++s) {
      BigInt r = mpz_uniform_below(master, est.discretized_total);
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
      alloc[static_cast<std::size_t>(it - cumulative.begin())] += 1;
    }
  }

  std::int64_t hits = 0;
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    if (alloc[ci] == 0) continue;
    Rng rng(derive_seed(seed, static_cast<std::int64_t>(ci)));
    for (std::int64_t s = 0; s < alloc[ci]; ++s) {
      auto sampled = family.sample_class_member(ci, rng);
      if (member(sampled)) ++hits;
    }
  }
  if (alloc[classes.size()] > 0) {
    std::vector<std::size_t> empty;
    if (member(empty)) hits += alloc[classes.size()];
  }

  est.hits = hits;
  est.samples = t;
  est.value = static_cast<double>(hits) / static_cast<double>(t) * est.discretized_total.get_d();
  est.exact = false;
  return est;
}

void check_mc_params(double epsilon, double delta) {
  if (!(epsilon > 0 && epsilon < 1) || !(delta > 0 && delta < 1))
    throw std::invalid_argument("epsilon and delta must lie in (0,1)");
}

}  // namespace

CountEstimate estimate_count(const TwoTermConstraint& c, double epsilon, double delta,
                             std::uint64_t seed, const EngineOptions& opts) {
  c.validate();
  check_mc_params(epsilon, delta);
  auto family = detail::make_twoterm_family(safe_logl(c.A), safe_logl(c.B), c.x, c.z());
  auto member = [&c](const std::vector<std::size_t>& s) {
    return twoterm_membership(c, s) != Verdict::Out;
  };
  return run_estimate(*family, member, c.size(), epsilon, delta, seed, opts,
                      opts.ratio_bound_power);
}

CountEstimate count_knapsack(const std::vector<double>& w, double cap, double epsilon,
                             double delta, std::uint64_t seed, const EngineOptions& opts) {
  for (double wi : w)
    if (!(wi >= 0)) throw std::invalid_argument("count_knapsack: negative weight");
  check_mc_params(epsilon, delta);
  const std::size_t n = w.size();

  CountEstimate est;
  est.exact = true;
  if (cap < 0) return est;
  double total_weight = 0;
  for (double wi : w) total_weight += wi;
  if (cap >= total_weight) {
    BigInt all;
    mpz_ui_pow_ui(all.get_mpz_t(), 2, n);
    est.discretized_total = all;
    est.value = all.get_d();
    return est;
  }

  // Single-term degeneration: log A = -cap, B = 0. One maximum, so the
  // preimage bound drops to n+1.
  std::vector<double> zeros(n, 0.0);
  auto family = detail::make_twoterm_family(static_cast<long double>(-cap),
                                            -std::numeric_limits<long double>::infinity(), w,
                                            zeros);
  auto member = [&w, cap](const std::vector<std::size_t>& s) {
    long double sum = 0.0L;
    for (std::size_t i : s) sum += w[i];
    long double slack = static_cast<long double>(kGuardBand) *
                        std::max(1.0L, std::fabs(static_cast<long double>(cap)));
    return sum <= static_cast<long double>(cap) + slack;
  };
  return run_estimate(*family, member, n, epsilon, delta, seed, opts, 1);
}

CountEstimate count_knapsack_grouped(const std::vector<double>& w, double cap,
                                     const std::vector<int>& group_of, const std::vector<int>& r,
                                     double epsilon, double delta, std::uint64_t seed,
                                     const EngineOptions& opts) {
  const std::size_t n = w.size();
  if (group_of.size() != n) throw std::invalid_argument("count_knapsack_grouped: group map size");
  check_mc_params(epsilon, delta);
  const std::size_t ngroups = r.size();
  std::vector<int> sizes(ngroups, 0);
  for (double wi : w)
    if (!(wi >= 0)) throw std::invalid_argument("count_knapsack_grouped: negative weight");
  for (int g : group_of) {
    if (g < 0 || static_cast<std::size_t>(g) >= ngroups)
      throw std::invalid_argument("count_knapsack_grouped: group id out of range");
    sizes[static_cast<std::size_t>(g)] += 1;
  }
  long long want = 0;
  for (std::size_t g = 0; g < ngroups; ++g) {
    if (r[g] < 0 || r[g] > sizes[g])
      throw std::invalid_argument("count_knapsack_grouped: infeasible group requirement");
    want += r[g];
  }

  CountEstimate est;
  est.exact = true;
  if (want == 0) {
    bool in = cap >= 0;
    est.discretized_total = in ? 1 : 0;
    est.value = in ? 1.0 : 0.0;
    if (in) {
      est.hits = 1;
      est.samples = 1;
    }
    return est;
  }
  if (cap < 0) return est;

  double total_weight = 0;
  for (double wi : w) total_weight += wi;
  if (cap >= total_weight) {
    BigInt prod = 1;
    for (std::size_t g = 0; g < ngroups; ++g) {
      BigInt bin;
      mpz_bin_uiui(bin.get_mpz_t(), static_cast<unsigned long>(sizes[g]),
                   static_cast<unsigned long>(r[g]));
      prod *= bin;
    }
    est.discretized_total = prod;
    est.value = prod.get_d();
    return est;
  }

  std::unique_ptr<detail::FamilyImpl> family;
  if (n <= 62)
    family = std::make_unique<detail::GroupedFamily<std::uint64_t>>(
        static_cast<long double>(-cap), w, group_of, r);
  else
    family = std::make_unique<detail::GroupedFamily<BigInt>>(static_cast<long double>(-cap), w,
                                                             group_of, r);
  auto member = [&w, cap](const std::vector<std::size_t>& s) {
    long double sum = 0.0L;
    for (std::size_t i : s) sum += w[i];
    long double slack = static_cast<long double>(kGuardBand) *
                        std::max(1.0L, std::fabs(static_cast<long double>(cap)));
    return sum <= static_cast<long double>(cap) + slack;
  };
  return run_estimate(*family, member, n, epsilon, delta, seed, opts, 1);
}

}  // namespace tvdist
