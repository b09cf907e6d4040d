#include "nearrat/rational.hpp"

#include <cctype>
#include <string>

#include "nearrat/errors.hpp"

namespace nearrat {

namespace {

Rational parse_decimal(std::string_view s) {
  std::string text(s);
  bool neg = false;
  std::size_t pos = 0;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    neg = text[pos] == '-';
    ++pos;
  }
  std::string digits;
  long exponent = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) --exponent;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c == 'e' || c == 'E') {
      ++pos;
      if (pos >= text.size()) throw InvalidArgument("bad number: " + text);
      try {
        std::size_t used = 0;
        long e = std::stol(text.substr(pos), &used);
        if (pos + used != text.size()) throw InvalidArgument("bad number: " + text);
        exponent += e;
      } catch (const std::logic_error&) {
        throw InvalidArgument("bad number: " + text);
      }
      pos = text.size();
      break;
    } else {
      throw InvalidArgument("bad number: " + text);
    }
  }
  if (!seen_digit) throw InvalidArgument("bad number: " + text);
  mpz_class num(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  Rational r = exponent >= 0 ? Rational(num * scale) : Rational(num, scale);
  r.canonicalize();
  return neg ? Rational(-r) : r;
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string t = trim(text);
  if (t.empty()) throw InvalidArgument("empty rational literal");
  auto slash = t.find('/');
  if (slash == std::string::npos) return parse_decimal(t);
  Rational num = parse_decimal(t.substr(0, slash));
  Rational den = parse_decimal(t.substr(slash + 1));
  if (den == 0) throw InvalidArgument("zero denominator: " + t);
  Rational r = num / den;
  r.canonicalize();
  return r;
}

std::string to_string(const Rational& r) { return r.get_str(); }

}  // namespace nearrat
