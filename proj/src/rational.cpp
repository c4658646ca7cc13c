#include "tvdist/rational.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

namespace tvdist {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s = text;
  // trim
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  if (s.empty()) throw std::invalid_argument("empty rational literal");

  bool negative = false;
  if (s[0] == '+' || s[0] == '-') {
    negative = (s[0] == '-');
    s.erase(s.begin());
  }

  Rational value;
  auto slash = s.find('/');
  auto dot = s.find('.');
  if (slash != std::string::npos) {
    std::string num = s.substr(0, slash);
    std::string den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den))
      throw std::invalid_argument("bad rational literal: " + text);
    BigInt n(num), d(den);
    if (d == 0) throw std::invalid_argument("zero denominator: " + text);
    value = Rational(n, d);
  } else if (dot != std::string::npos) {
    std::string whole = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (frac.empty()) frac = "0";
    if (!all_digits(whole) || !all_digits(frac))
      throw std::invalid_argument("bad decimal literal: " + text);
    if (frac.size() > 18)
      throw std::invalid_argument("more than 18 fractional digits: " + text);
    BigInt scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    BigInt num = BigInt(whole) * scale + BigInt(frac);
    value = Rational(num, scale);
  } else {
    if (!all_digits(s)) throw std::invalid_argument("bad rational literal: " + text);
    value = Rational(BigInt(s));
  }
  value.canonicalize();
  if (negative) value = -value;
  return value;
}

std::string to_fraction_string(const Rational& r) {
  Rational c = r;
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

std::string to_decimal_string(const Rational& r, int digits) {
  std::ostringstream os;
  os.precision(digits);
  os << r.get_d();
  return os.str();
}

Rational pow2(long e) {
  BigInt p;
  mpz_ui_pow_ui(p.get_mpz_t(), 2, static_cast<unsigned long>(e < 0 ? -e : e));
  Rational r(p);
  if (e < 0) r = 1 / r;
  return r;
}

Rational rational_pow(const Rational& r, unsigned long e) {
  Rational acc(1), base = r;
  while (e > 0) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  acc.canonicalize();
  return acc;
}

}  // namespace tvdist
