#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "nearrat/errors.hpp"
#include "nearrat/manifold.hpp"
#include "nearrat/matrix.hpp"
#include "nearrat/rational.hpp"

namespace nearrat {

// Antidiagonal permutation matrix of size k.
template <class T>
Matrix<T> weyl(int k) {
  if (k < 1) throw InvalidArgument("weyl: size must be positive");
  Matrix<T> s(k, k);
  for (int i = 0; i < k; ++i) s(i, k - 1 - i) = T(1);
  return s;
}

// g* = sigma^-1 (g^T)^-1 sigma.
template <class T>
Matrix<T> dual(const Matrix<T>& g) {
  if (!g.square()) throw InvalidArgument("dual: matrix must be square");
  const Matrix<T> s = weyl<T>(g.rows());
  return s * g.transpose().inverse() * s;
}

// z(x): identity with the block -sigma_m J(x)^T sigma_d in rows [0, m),
// columns [m, n). J is d x m, so the block is its reversed transpose.
template <class T>
Matrix<T> z_matrix(const ManifoldMap& map, std::span<const T> x) {
  const int d = map.d(), m = map.m(), n = map.n();
  Matrix<T> z = Matrix<T>::identity(n + 1);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < d; ++c) z(r, m + c) = -map.first_partial(d - 1 - c, m - 1 - r, x);
  return z;
}

// u(x): identity with last column (sigma_n F(x)^T, 1), F(x) = (x, f(x)).
template <class T>
Matrix<T> u_matrix(const ManifoldMap& map, std::span<const T> x) {
  const int d = map.d(), m = map.m(), n = map.n();
  Matrix<T> u = Matrix<T>::identity(n + 1);
  const auto f = map.eval_f(x);
  for (int r = 0; r < m; ++r) u(r, n) = f[m - 1 - r];
  for (int r = 0; r < d; ++r) u(m + r, n) = x[d - 1 - r];
  return u;
}

// u1(x) = z(x) u(x), filled entrywise.
template <class T>
Matrix<T> u1_matrix(const ManifoldMap& map, std::span<const T> x) {
  const int d = map.d(), m = map.m(), n = map.n();
  Matrix<T> u = Matrix<T>::identity(n + 1);
  const auto f = map.eval_f(x);
  for (int r = 0; r < m; ++r) {
    const int k = m - 1 - r;
    T last = f[k];
    for (int c = 0; c < d; ++c) {
      const int i = d - 1 - c;
      const T dfi = map.first_partial(i, k, x);
      u(r, m + c) = -dfi;
      last -= x[i] * dfi;
    }
    u(r, n) = last;
  }
  for (int r = 0; r < d; ++r) u(m + r, n) = x[d - 1 - r];
  return u;
}

// Block form [[1, -x, -f(x)], [0, I_d, J(x)], [0, 0, I_m]] of dual(u1(x)).
template <class T>
Matrix<T> dual_u1_closed_form(const ManifoldMap& map, std::span<const T> x) {
  const int d = map.d(), m = map.m(), n = map.n();
  Matrix<T> g = Matrix<T>::identity(n + 1);
  const auto f = map.eval_f(x);
  for (int i = 0; i < d; ++i) g(0, 1 + i) = -x[i];
  for (int j = 0; j < m; ++j) g(0, 1 + d + j) = -f[j];
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < m; ++j) g(1 + i, 1 + d + j) = map.first_partial(i, j, x);
  return g;
}

// phi = (eps^n e^t)^(1/(n+1)), h = d t / (2(n+1)).
double phi_factor(double eps, double t, int n);
double h_factor(double t, int n, int d);

// phi * diag(eps^-1 (n times), e^-t).
Matrix<double> g_eps_t(double eps, double t, int n);
// diag(e^h (m times), e^(-(m+1)t/(2(n+1))) (d times), e^h).
Matrix<double> b_t(double t, int n, int m, int d);
// diag(1 (m times), eps^(1/2) (d times), 1).
Matrix<double> d_eps(double eps, int n, int m, int d);
// v^-1 diag(eps (m times), (eps^m e^t)^(-1/d) (d times), v^(n+1) e^t).
Matrix<double> a_eps_t_v(double eps, double t, double v, int n, int m, int d);

// Coefficients of t in the exponents of b_t's diagonal, as exact rationals.
std::vector<Rational> b_t_exponents(int n, int m, int d);

nlohmann::json matrix_to_json(const Matrix<double>& g);
nlohmann::json matrix_to_json(const Matrix<Rational>& g);

}  // namespace nearrat
