#pragma once

#include <gmpxx.h>

#include <cmath>
#include <string>
#include <string_view>

namespace pomap {

// Exact arithmetic backend for LP vertices, dual certificates and tree DP in
// exact mode.
using Rational = mpq_class;

// Parses "p/q", an integer, or a decimal literal with optional exponent
// ("-0.125", "1e-3") into an exact rational.
Rational parse_rational(std::string_view text);

// Exact rational view of a double: the value of its shortest round-trip decimal
// representation. 0.1 maps to 1/10, not to the dyadic value of the double.
Rational decimal_rational(double value);

// "p/q", or "p" when the denominator is one.
std::string to_string(const Rational& value);

inline double to_double(const Rational& value) { return value.get_d(); }
inline double to_double(double value) { return value; }

template <class Scalar>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
   static constexpr bool exact = false;
   static double from(const Rational& v) { return v.get_d(); }
   static double from_double(double v) { return v; }
   // Floating tie tolerance relative to the magnitude of the optimum.
   static double default_tolerance(double optimum) { return 1e-9 * (1.0 + std::abs(optimum)); }
};

template <>
struct ScalarTraits<Rational> {
   static constexpr bool exact = true;
   static Rational from(const Rational& v) { return v; }
   static Rational from_double(double v) { return decimal_rational(v); }
   static Rational default_tolerance(const Rational&) { return Rational(0); }
};

} // namespace pomap
