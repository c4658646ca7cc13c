#ifndef TVDIST_RATIONAL_HPP
#define TVDIST_RATIONAL_HPP

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

namespace tvdist {

using Rational = mpq_class;
using BigInt = mpz_class;

// Parses "num/den", an integer, or a decimal string with at most 18
// fractional digits (read exactly as num/10^k). Throws std::invalid_argument.
Rational parse_rational(const std::string& text);

// Canonical "num/den" rendering ("num" alone when den == 1).
std::string to_fraction_string(const Rational& r);

// Decimal rendering with the given number of significant digits.
std::string to_decimal_string(const Rational& r, int digits = 17);

// 2^e for any integer e (negative exponents give 1/2^|e|).
Rational pow2(long e);

// r^e for e >= 0.
Rational rational_pow(const Rational& r, unsigned long e);

inline double to_double(const Rational& r) { return r.get_d(); }

}  // namespace tvdist

#endif
