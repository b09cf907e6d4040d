#include "nearrat/minima.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "nearrat/errors.hpp"

namespace nearrat {

namespace {

constexpr int kMaxDim = 8;
using Vec = std::array<long double, kMaxDim>;
using IntMat = std::vector<std::vector<std::int64_t>>;  // column-major: U[col][row]

std::int64_t checked_mul_add(std::int64_t a, std::int64_t q, std::int64_t b) {
  // a - q * b with overflow detection
  std::int64_t prod = 0, res = 0;
  if (__builtin_mul_overflow(q, b, &prod) || __builtin_sub_overflow(a, prod, &res))
    throw NumericOverflow("lattice reduction: integer coefficient overflow");
  return res;
}

struct Reducer {
  int k;
  std::vector<Vec> orig;  // input columns
  std::vector<Vec> col;   // current columns
  IntMat U;               // col[j] = sum_i orig[i] * U[j][i]
  std::array<std::array<long double, kMaxDim>, kMaxDim> mu{};
  std::array<long double, kMaxDim> bn{};

  long double dot(const Vec& a, const Vec& b) const {
    long double s = 0;
    for (int i = 0; i < k; ++i) s += a[i] * b[i];
    return s;
  }

  void rebuild_columns() {
    for (int j = 0; j < k; ++j) {
      Vec v{};
      for (int i = 0; i < k; ++i) {
        if (U[j][i] == 0) continue;
        const long double c = static_cast<long double>(U[j][i]);
        for (int r = 0; r < k; ++r) v[r] += c * orig[i][r];
      }
      col[j] = v;
    }
  }

  void gram_schmidt() {
    std::array<Vec, kMaxDim> star{};
    for (int i = 0; i < k; ++i) {
      star[i] = col[i];
      for (int j = 0; j < i; ++j) {
        mu[i][j] = bn[j] > 0 ? dot(col[i], star[j]) / bn[j] : 0.0L;
        for (int r = 0; r < k; ++r) star[i][r] -= mu[i][j] * star[j][r];
      }
      mu[i][i] = 1.0L;
      bn[i] = dot(star[i], star[i]);
    }
  }

  void subtract(int target, int src, std::int64_t q) {
    for (int r = 0; r < k; ++r) col[target][r] -= static_cast<long double>(q) * col[src][r];
    for (int i = 0; i < k; ++i) U[target][i] = checked_mul_add(U[target][i], q, U[src][i]);
    for (int l = 0; l <= src; ++l) mu[target][l] -= static_cast<long double>(q) * mu[src][l];
  }

  void size_reduce(int i) {
    for (int pass = 0; pass < 4; ++pass) {
      bool changed = false;
      for (int j = i - 1; j >= 0; --j) {
        const long double m = mu[i][j];
        if (std::fabs(m) <= 0.5L) continue;
        const long double qr = std::nearbyint(m);
        if (std::fabs(qr) > 9.0e18L) throw NumericOverflow("lattice reduction: size-reduction coefficient overflow");
        subtract(i, j, static_cast<std::int64_t>(qr));
        changed = true;
      }
      if (!changed) break;
      gram_schmidt();
    }
  }

  // LLL where indices below `barrier` and at or above it are reduced as two
  // separate blocks; no swap crosses the barrier.
  void lll(int barrier, double delta) {
    gram_schmidt();
    int i = 1;
    std::int64_t guard = 0;
    while (i < k) {
      if (++guard > 1'000'000) throw NumericOverflow("lattice reduction: LLL did not converge");
      size_reduce(i);
      if (i == barrier) {
        ++i;
        continue;
      }
      const long double m = mu[i][i - 1];
      if (bn[i] >= (static_cast<long double>(delta) - m * m) * bn[i - 1]) {
        ++i;
      } else {
        std::swap(col[i], col[i - 1]);
        std::swap(U[i], U[i - 1]);
        gram_schmidt();
        i = std::max(i - 1, 1);
      }
    }
    rebuild_columns();
    gram_schmidt();
  }
};

struct Enumerator {
  const Reducer& red;
  int r;  // coefficients at indices >= r must not all vanish
  std::int64_t& nodes;
  std::int64_t budget;
  std::array<std::int64_t, kMaxDim> c{};
  long double radius2 = 0;
  long double best = std::numeric_limits<long double>::infinity();
  std::array<std::int64_t, kMaxDim> best_c{};
  std::vector<std::int64_t> best_orig;

  Enumerator(const Reducer& rd, int rr, std::int64_t& nd, std::int64_t bg) : red(rd), r(rr), nodes(nd), budget(bg) {}

  std::vector<std::int64_t> canonical_orig(const std::array<std::int64_t, kMaxDim>& cc) const {
    std::vector<std::int64_t> o(red.k, 0);
    for (int j = 0; j < red.k; ++j) {
      if (cc[j] == 0) continue;
      for (int i = 0; i < red.k; ++i) o[i] += cc[j] * red.U[j][i];
    }
    auto first = std::find_if(o.begin(), o.end(), [](std::int64_t v) { return v != 0; });
    if (first != o.end() && *first < 0)
      for (auto& v : o) v = -v;
    return o;
  }

  void leaf() {
    Vec v{};
    for (int j = 0; j < red.k; ++j) {
      if (c[j] == 0) continue;
      for (int i = 0; i < red.k; ++i) v[i] += static_cast<long double>(c[j]) * red.col[j][i];
    }
    const long double n2 = red.dot(v, v);
    if (!(n2 > 0)) return;
    bool take = false;
    if (n2 < best * (1.0L - 1e-12L)) {
      take = true;
    } else if (n2 <= best * (1.0L + 1e-12L)) {
      take = canonical_orig(c) < best_orig;
    }
    if (!take) return;
    best = std::min(best, n2);
    best_c = c;
    best_orig = canonical_orig(c);
    radius2 = std::min(radius2, best * (1.0L + 1e-10L));
  }

  void visit(int lvl, long double partial, bool top_zero) {
    if (lvl < 0) {
      leaf();
      return;
    }
    if (top_zero && lvl < r) return;
    long double center = 0;
    for (int j = lvl + 1; j < red.k; ++j) center -= static_cast<long double>(c[j]) * red.mu[j][lvl];
    const long double b = red.bn[lvl];
    auto try_value = [&](std::int64_t x) -> bool {
      if (++nodes > budget)
        throw NumericOverflow("successive minima: enumeration node budget exhausted (basis too skewed)");
      const long double diff = static_cast<long double>(x) - center;
      const long double dist = partial + diff * diff * b;
      if (dist > radius2) return false;
      c[lvl] = x;
      visit(lvl - 1, dist, top_zero && x == 0);
      c[lvl] = 0;
      return true;
    };
    if (top_zero) {
      // Sign symmetry: the leading nonzero coefficient is taken positive.
      try_value(0);
      for (std::int64_t x = 1;; ++x)
        if (!try_value(x)) break;
      return;
    }
    const std::int64_t x0 = static_cast<std::int64_t>(std::nearbyint(center));
    std::int64_t up = x0, down = x0 - 1;
    bool up_open = true, down_open = true;
    if (center < static_cast<long double>(x0)) {
      up = x0;
      down = x0 - 1;
    }
    while (up_open || down_open) {
      const long double du = std::fabs(static_cast<long double>(up) - center);
      const long double dd = std::fabs(static_cast<long double>(down) - center);
      if (up_open && (!down_open || du <= dd)) {
        up_open = try_value(up);
        ++up;
      } else {
        down_open = try_value(down);
        --down;
      }
    }
  }
};

// Unimodular V (column-major) whose first column is the primitive vector a.
IntMat complete_to_unimodular(std::vector<std::int64_t> a) {
  const int s = static_cast<int>(a.size());
  IntMat inv(s, std::vector<std::int64_t>(s, 0));  // columns of M^-1
  for (int i = 0; i < s; ++i) inv[i][i] = 1;
  // Row operations on a (tracked as column operations on M^-1) reduce a to e_1.
  for (int j = 1; j < s; ++j) {
    while (a[j] != 0) {
      const std::int64_t q = a[0] / a[j];
      a[0] -= q * a[j];
      // row0 -= q row_j on M  <=>  col_j += q col_0 on M^-1
      for (int i = 0; i < s; ++i) inv[j][i] += q * inv[0][i];
      std::swap(a[0], a[j]);
      std::swap(inv[0], inv[j]);
    }
  }
  if (a[0] < 0)
    for (int i = 0; i < s; ++i) inv[0][i] = -inv[0][i];
  return inv;
}

}  // namespace

std::vector<std::vector<std::int64_t>> lll_reduce(Matrix<long double>& basis, double delta) {
  const int k = basis.rows();
  if (!basis.square() || k < 1 || k > kMaxDim) throw InvalidArgument("lll_reduce: need a square basis of size 1..8");
  Reducer red;
  red.k = k;
  red.orig.assign(k, Vec{});
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) red.orig[j][i] = basis(i, j);
  red.col = red.orig;
  red.U.assign(k, std::vector<std::int64_t>(k, 0));
  for (int j = 0; j < k; ++j) red.U[j][j] = 1;
  red.lll(0, delta);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) basis(i, j) = red.col[j][i];
  IntMat u(k, std::vector<std::int64_t>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) u[i][j] = red.U[j][i];
  return u;
}

namespace {

MinimaResult minima_impl(const Matrix<double>& basis, const MinimaOptions& opt, int want) {
  const int k = basis.rows();
  if (!basis.square() || k < 1 || k > kMaxDim)
    throw InvalidArgument("successive_minima: need a square basis of size 1..8");
  for (double v : basis.data())
    if (!std::isfinite(v)) throw NumericOverflow("successive_minima: non-finite basis entry");
  const double det = basis.determinant();
  if (!(std::fabs(det) > opt.det_tol)) throw SingularMatrix("successive_minima: |det| below tolerance");

  MinimaResult res;
  {
    Eigen::MatrixXd a(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) a(i, j) = basis(i, j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    res.condition = sv(0) / sv(k - 1);
    if (res.condition > opt.cond_warn) res.warnings.push_back("basis condition number exceeds warning threshold");
  }

  Reducer red;
  red.k = k;
  red.orig.assign(k, Vec{});
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) red.orig[j][i] = basis(i, j);
  red.col = red.orig;
  red.U.assign(k, std::vector<std::int64_t>(k, 0));
  for (int j = 0; j < k; ++j) red.U[j][j] = 1;
  red.lll(0, 0.99);

  for (int r = 0; r < k; ++r) {
    Enumerator en(red, r, res.nodes, opt.node_budget);
    long double init = std::numeric_limits<long double>::infinity();
    for (int j = r; j < k; ++j) init = std::min(init, red.dot(red.col[j], red.col[j]));
    en.radius2 = init * (1.0L + 1e-10L);
    en.visit(k - 1, 0.0L, true);
    if (!std::isfinite(static_cast<double>(en.best)))
      throw NumericOverflow("successive_minima: enumeration found no vector (precision loss)");

    Vec v{};
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i) v[i] += static_cast<long double>(en.best_c[j]) * red.col[j][i];
    res.minima.push_back(static_cast<double>(std::sqrt(en.best)));
    std::vector<std::int64_t> coeff(k, 0);
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i) coeff[i] += en.best_c[j] * red.U[j][i];
    res.coefficients.push_back(coeff);
    std::vector<double> vd(k);
    for (int i = 0; i < k; ++i) vd[i] = static_cast<double>(v[i]);
    res.vectors.push_back(vd);
    if (r == k - 1 || r + 1 == want) break;

    std::vector<std::int64_t> tail(en.best_c.begin() + r, en.best_c.begin() + k);
    std::int64_t g = 0;
    for (auto t : tail) g = std::gcd(g, t < 0 ? -t : t);
    for (auto& t : tail) t /= g;
    const IntMat V = complete_to_unimodular(tail);
    const int s = k - r;
    std::vector<std::vector<std::int64_t>> newU(s, std::vector<std::int64_t>(k, 0));
    for (int j = 0; j < s; ++j)
      for (int l = 0; l < s; ++l) {
        if (V[j][l] == 0) continue;
        for (int i = 0; i < k; ++i) {
          std::int64_t prod = 0;
          if (__builtin_mul_overflow(V[j][l], red.U[r + l][i], &prod) ||
              __builtin_add_overflow(newU[j][i], prod, &newU[j][i]))
            throw NumericOverflow("successive_minima: integer coefficient overflow");
        }
      }
    for (int j = 0; j < s; ++j) red.U[r + j] = newU[j];
    red.rebuild_columns();
    red.lll(r + 1, 0.99);
  }
  for (std::size_t i = 1; i < res.minima.size(); ++i) res.minima[i] = std::max(res.minima[i], res.minima[i - 1]);
  return res;
}

}  // namespace

MinimaResult successive_minima(const Matrix<double>& basis, const MinimaOptions& opt) {
  return minima_impl(basis, opt, 0);
}

double delta1(const Matrix<double>& basis, const MinimaOptions& opt) {
  return minima_impl(basis, opt, 1).minima.front();
}

double delta_last(const Matrix<double>& basis, const MinimaOptions& opt) {
  return successive_minima(basis, opt).minima.back();
}

double unit_ball_volume(int k) {
  return std::pow(M_PI, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

}  // namespace nearrat
