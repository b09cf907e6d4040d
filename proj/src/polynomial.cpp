#include "nearrat/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include "nearrat/errors.hpp"

namespace nearrat {

Polynomial::Polynomial(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 1 || num_vars > kMaxVars) throw InvalidArgument("polynomial: unsupported number of variables");
}

Polynomial Polynomial::constant(int num_vars, const Rational& c) {
  Polynomial p(num_vars);
  p.add_term(std::vector<int>(num_vars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int num_vars, int var) {
  Polynomial p(num_vars);
  std::vector<int> e(num_vars, 0);
  e.at(var) = 1;
  p.add_term(e, 1);
  return p;
}

void Polynomial::add_term(std::vector<int> exponents, const Rational& coeff) {
  if (static_cast<int>(exponents.size()) != num_vars_) throw InvalidArgument("polynomial term: wrong exponent count");
  int deg = 0;
  for (int e : exponents) {
    if (e < 0) throw InvalidArgument("polynomial term: negative exponent");
    deg += e;
  }
  if (deg > kMaxDegree) throw InvalidArgument("polynomial term: degree too large");
  auto it = std::find_if(terms_.begin(), terms_.end(), [&](const Term& t) { return t.exponents == exponents; });
  if (it != terms_.end()) {
    it->coeff += coeff;
    if (it->coeff == 0) terms_.erase(it);
  } else if (coeff != 0) {
    terms_.push_back(Term{std::move(exponents), coeff});
  }
  std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) { return a.exponents < b.exponents; });
  rebuild_cache();
}

void Polynomial::rebuild_cache() {
  coeff_d_.clear();
  exps_flat_.clear();
  degree_ = -1;
  for (const auto& t : terms_) {
    coeff_d_.push_back(t.coeff.get_d());
    int deg = 0;
    for (int e : t.exponents) {
      exps_flat_.push_back(e);
      deg += e;
    }
    degree_ = std::max(degree_, deg);
  }
  dense_.clear();
  if (num_vars_ == 1) {
    dense_.assign(std::max(degree_, 0) + 1, 0.0);
    for (const auto& t : terms_) dense_[t.exponents[0]] = t.coeff.get_d();
  }
}

double Polynomial::operator()(std::span<const double> x) const {
  if (num_vars_ == 1) {
    double acc = 0.0;
    for (auto it = dense_.rbegin(); it != dense_.rend(); ++it) acc = acc * x[0] + *it;
    return acc;
  }
  double pw[kMaxVars][kMaxDegree + 1];
  const int deg = std::max(degree_, 0);
  for (int v = 0; v < num_vars_; ++v) {
    pw[v][0] = 1.0;
    for (int e = 1; e <= deg; ++e) pw[v][e] = pw[v][e - 1] * x[v];
  }
  double acc = 0.0;
  const std::size_t nt = coeff_d_.size();
  for (std::size_t t = 0; t < nt; ++t) {
    double term = coeff_d_[t];
    const int* ex = &exps_flat_[t * num_vars_];
    for (int v = 0; v < num_vars_; ++v) term *= pw[v][ex[v]];
    acc += term;
  }
  return acc;
}

long double Polynomial::eval_long(std::span<const long double> x) const {
  long double acc = 0.0L;
  for (const auto& t : terms_) {
    long double term = static_cast<long double>(t.coeff.get_num().get_d()) /
                       static_cast<long double>(t.coeff.get_den().get_d());
    for (int v = 0; v < num_vars_; ++v)
      for (int e = 0; e < t.exponents[v]; ++e) term *= x[v];
    acc += term;
  }
  return acc;
}

Rational Polynomial::operator()(std::span<const Rational> x) const {
  Rational acc = 0;
  for (const auto& t : terms_) {
    Rational term = t.coeff;
    for (int v = 0; v < num_vars_; ++v)
      for (int e = 0; e < t.exponents[v]; ++e) term *= x[v];
    acc += term;
  }
  acc.canonicalize();
  return acc;
}

Polynomial Polynomial::derivative(int var) const {
  if (var < 0 || var >= num_vars_) throw InvalidArgument("derivative: variable out of range");
  Polynomial r(num_vars_);
  for (const auto& t : terms_) {
    if (t.exponents[var] == 0) continue;
    std::vector<int> e = t.exponents;
    Rational c = t.coeff * e[var];
    e[var] -= 1;
    r.add_term(std::move(e), c);
  }
  return r;
}

Polynomial Polynomial::partial(std::span<const int> beta) const {
  if (static_cast<int>(beta.size()) != num_vars_) throw InvalidArgument("partial: multi-index has wrong length");
  Polynomial r = *this;
  for (int v = 0; v < num_vars_; ++v)
    for (int k = 0; k < beta[v]; ++k) r = r.derivative(v);
  return r;
}

double Polynomial::sup_bound(const Ball& box) const {
  if (box.dim() != num_vars_) throw InvalidArgument("sup_bound: box dimension mismatch");
  double bound = 0.0;
  for (const auto& t : terms_) {
    double term = std::abs(t.coeff.get_d());
    for (int v = 0; v < num_vars_; ++v) {
      double a = std::max(std::abs(box.lo(v)), std::abs(box.hi(v)));
      term *= std::pow(a, t.exponents[v]);
    }
    bound += term;
  }
  // Round outward so the bound survives the double conversion of coefficients.
  return bound * (1.0 + 4e-16 * (terms_.size() + 1));
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  if (other.num_vars_ != num_vars_) throw InvalidArgument("polynomial sum: variable count mismatch");
  Polynomial r = *this;
  for (const auto& t : other.terms_) r.add_term(t.exponents, t.coeff);
  return r;
}

Polynomial Polynomial::operator*(const Rational& s) const {
  Polynomial r(num_vars_);
  for (const auto& t : terms_) r.add_term(t.exponents, t.coeff * s);
  return r;
}

}  // namespace nearrat
