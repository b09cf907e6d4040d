#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace nearrat {

using Rational = mpq_class;

// Accepts "p/q", integers and decimal literals ("0.25", "-1.5e-3"). Decimal
// literals are converted exactly (0.1 -> 1/10), not through binary doubles.
Rational parse_rational(std::string_view text);

// Exact value of a double.
inline Rational rational_from_double(double v) {
  Rational r(v);
  r.canonicalize();
  return r;
}

inline double to_double(const Rational& r) { return r.get_d(); }

std::string to_string(const Rational& r);

}  // namespace nearrat
