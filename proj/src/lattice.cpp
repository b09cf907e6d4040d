#include "nearrat/lattice.hpp"

#include <cmath>

namespace nearrat {

namespace {

void check_eps_t(double eps, double t) {
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("eps must lie in (0, 1]");
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("t must be positive and finite");
}

void check_dims(int n, int m, int d) {
  if (d < 1 || m < 1 || n != m + d) throw InvalidArgument("dimensions must satisfy n = m + d with m, d >= 1");
}

}  // namespace

double phi_factor(double eps, double t, int n) {
  return std::exp((n * std::log(eps) + t) / (n + 1));
}

double h_factor(double t, int n, int d) { return d * t / (2.0 * (n + 1)); }

Matrix<double> g_eps_t(double eps, double t, int n) {
  check_eps_t(eps, t);
  if (n < 2) throw InvalidArgument("g_eps_t: n must be at least 2");
  const double phi = phi_factor(eps, t, n);
  std::vector<double> diag(n + 1, phi / eps);
  diag[n] = phi * std::exp(-t);
  return Matrix<double>::diagonal(diag);
}

Matrix<double> b_t(double t, int n, int m, int d) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("t must be positive and finite");
  check_dims(n, m, d);
  const auto ex = b_t_exponents(n, m, d);
  std::vector<double> diag(n + 1);
  for (int i = 0; i <= n; ++i) diag[i] = std::exp(ex[i].get_d() * t);
  return Matrix<double>::diagonal(diag);
}

Matrix<double> d_eps(double eps, int n, int m, int d) {
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("eps must lie in (0, 1]");
  check_dims(n, m, d);
  std::vector<double> diag(n + 1, 1.0);
  for (int i = 0; i < d; ++i) diag[m + i] = std::sqrt(eps);
  return Matrix<double>::diagonal(diag);
}

Matrix<double> a_eps_t_v(double eps, double t, double v, int n, int m, int d) {
  check_eps_t(eps, t);
  check_dims(n, m, d);
  if (!(v > 0.0 && v <= 1.0)) throw InvalidArgument("v must lie in (0, 1]");
  std::vector<double> diag(n + 1);
  for (int i = 0; i < m; ++i) diag[i] = eps / v;
  const double mid = std::exp(-(m * std::log(eps) + t) / d) / v;
  for (int i = 0; i < d; ++i) diag[m + i] = mid;
  diag[n] = std::exp(n * std::log(v) + t);
  return Matrix<double>::diagonal(diag);
}

std::vector<Rational> b_t_exponents(int n, int m, int d) {
  check_dims(n, m, d);
  std::vector<Rational> ex(n + 1, Rational(d, 2 * (n + 1)));
  for (int i = 0; i < d; ++i) ex[m + i] = Rational(-(m + 1), 2 * (n + 1));
  for (auto& e : ex) e.canonicalize();
  return ex;
}

nlohmann::json matrix_to_json(const Matrix<double>& g) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < g.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < g.cols(); ++j) row.push_back(g(i, j));
    rows.push_back(row);
  }
  return {{"rows", g.rows()}, {"cols", g.cols()}, {"mode", "float"}, {"entries", rows}};
}

nlohmann::json matrix_to_json(const Matrix<Rational>& g) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < g.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < g.cols(); ++j) row.push_back(to_string(g(i, j)));
    rows.push_back(row);
  }
  return {{"rows", g.rows()}, {"cols", g.cols()}, {"mode", "exact"}, {"entries", rows}};
}

}  // namespace nearrat
