#pragma once

#include <span>
#include <vector>

#include "nearrat/ball.hpp"
#include "nearrat/rational.hpp"

namespace nearrat {

struct Term {
  std::vector<int> exponents;
  Rational coeff;
};

// Multivariate polynomial with exact rational coefficients. Evaluation in
// double uses a cached flat copy of the terms and a per-call power table, so it
// does not allocate.
class Polynomial {
 public:
  static constexpr int kMaxVars = 8;
  static constexpr int kMaxDegree = 24;

  explicit Polynomial(int num_vars = 1);

  static Polynomial constant(int num_vars, const Rational& c);
  static Polynomial variable(int num_vars, int var);

  // Adds c * x^exponents, merging like terms; zero terms are dropped.
  void add_term(std::vector<int> exponents, const Rational& coeff);

  int num_vars() const { return num_vars_; }
  int degree() const { return degree_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const { return degree_ <= 0; }
  const std::vector<Term>& terms() const { return terms_; }

  double operator()(std::span<const double> x) const;
  long double eval_long(std::span<const long double> x) const;
  Rational operator()(std::span<const Rational> x) const;

  Polynomial derivative(int var) const;
  // beta[i] = number of derivatives taken in variable i.
  Polynomial partial(std::span<const int> beta) const;

  // Rigorous upper bound on sup |p| over the box, from |c| * prod max|x_i|^e.
  double sup_bound(const Ball& box) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator*(const Rational& s) const;

 private:
  void rebuild_cache();

  int num_vars_;
  int degree_ = -1;
  std::vector<Term> terms_;
  std::vector<double> coeff_d_;
  std::vector<int> exps_flat_;
  std::vector<double> dense_;  // univariate coefficients by power, for Horner
};

}  // namespace nearrat
