#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nearrat/ball.hpp"
#include "nearrat/matrix.hpp"
#include "nearrat/polynomial.hpp"
#include "nearrat/rational.hpp"

namespace nearrat {

// Monge-form map x -> (x, f(x)) with x in R^d and f = (f_1, ..., f_m) given
// by polynomials, so all partial derivatives are exact. U is the closed
// working domain; M bounds first and second partials of f over U.
class ManifoldMap {
 public:
  ManifoldMap(std::string name, int d, std::vector<Polynomial> components, Ball domain);

  const std::string& name() const { return name_; }
  int d() const { return d_; }
  int n() const { return d_ + m_; }
  int m() const { return m_; }
  // Highest derivative order that is not identically zero (at least 1).
  int l_max() const { return l_max_; }
  double derivative_bound() const { return bound_m_; }
  const Ball& domain() const { return domain_; }
  const Polynomial& component(int j) const { return components_[j]; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  bool in_domain(std::span<const double> x, double tol = 1e-12) const;

  // f(x) into out (size m); no allocation.
  void eval_f(std::span<const double> x, std::span<double> out) const;
  std::vector<double> eval_f(std::span<const double> x) const;
  std::vector<Rational> eval_f(std::span<const Rational> x) const;
  // Full map F(x) = (x, f(x)) in R^n.
  std::vector<double> full(std::span<const double> x) const;

  // First partial d f_j / d x_i.
  double first_partial(int i, int j, std::span<const double> x) const;
  Rational first_partial(int i, int j, std::span<const Rational> x) const;
  double second_partial(int i, int k, int j, std::span<const double> x) const;

  // d_beta f_j(x); CapabilityError when |beta| > l_max.
  double partial(std::span<const int> beta, int j, std::span<const double> x) const;
  Rational partial(std::span<const int> beta, int j, std::span<const Rational> x) const;

  // J(x) = [d_i f_j(x)], d x m.
  Matrix<double> jacobian(std::span<const double> x) const;
  Matrix<Rational> jacobian(std::span<const Rational> x) const;

  ManifoldMap with_domain(Ball domain) const;

 private:
  std::string name_;
  int d_;
  int m_;
  std::vector<Polynomial> components_;
  std::vector<Polynomial> first_;   // index i * m + j
  std::vector<Polynomial> second_;  // index (i * d + k) * m + j
  Ball domain_;
  int l_max_ = 1;
  double bound_m_ = 1.0;
  std::vector<std::string> warnings_;
};

// (x, x^2, ..., x^n) on U = [0, 1].
ManifoldMap veronese(int n);
// (x1, x2, x1^2 + x2^2) on U = [-1, 1]^2.
ManifoldMap paraboloid();
ManifoldMap polynomial_monge(int d, int n, std::vector<Polynomial> components, Ball domain,
                             std::string name = "polynomial");

// Map definition files: {"dim_d", "dim_n", "polynomials": [{"e1,e2": "coeff"}...],
// "domain": {"center": [...], "radius": r}}.
ManifoldMap map_from_json(const nlohmann::json& j);
nlohmann::json map_to_json(const ManifoldMap& map);
ManifoldMap load_map_file(const std::string& path);
// "veronese:N", "paraboloid" or "file:PATH".
ManifoldMap map_from_descriptor(const std::string& descriptor);

enum class RankMode { Float, Exact };

// Smallest l <= l_cap such that the partials d_beta F(x), 1 <= |beta| <= l, of
// the full map span R^n; nullopt when no such l exists.
std::optional<int> nondegeneracy_order(const ManifoldMap& map, std::span<const double> x, int l_cap,
                                       RankMode mode = RankMode::Float);

inline constexpr double kRankTolerance = 1e-9;

// Multi-indices beta in N^d with |beta| == order, in graded lexicographic order.
std::vector<std::vector<int>> multi_indices(int d, int order);

}  // namespace nearrat
