#include "nearrat/manifold.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nearrat/errors.hpp"

namespace nearrat {

namespace {

std::vector<Rational> to_rationals(std::span<const double> x) {
  std::vector<Rational> r;
  r.reserve(x.size());
  for (double v : x) r.push_back(rational_from_double(v));
  return r;
}

int exact_rank(std::vector<std::vector<Rational>> rows, int cols) {
  int rank = 0;
  const int nrows = static_cast<int>(rows.size());
  for (int c = 0; c < cols && rank < nrows; ++c) {
    int piv = -1;
    for (int r = rank; r < nrows; ++r)
      if (rows[r][c] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(rows[piv], rows[rank]);
    for (int r = rank + 1; r < nrows; ++r) {
      if (rows[r][c] == 0) continue;
      Rational f = rows[r][c] / rows[rank][c];
      for (int j = c; j < cols; ++j) rows[r][j] -= f * rows[rank][j];
    }
    ++rank;
  }
  return rank;
}

int float_rank(const std::vector<std::vector<double>>& rows, int cols) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < cols; ++c) a(static_cast<Eigen::Index>(r), c) = rows[r][c];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > kRankTolerance) ++rank;
  return rank;
}

void fill_indices(int d, int order, int pos, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (pos == d - 1) {
    cur[pos] = order;
    out.push_back(cur);
    return;
  }
  for (int k = order; k >= 0; --k) {
    cur[pos] = k;
    fill_indices(d, order - k, pos + 1, cur, out);
  }
}

}  // namespace

ManifoldMap::ManifoldMap(std::string name, int d, std::vector<Polynomial> components, Ball domain)
    : name_(std::move(name)), d_(d), components_(std::move(components)), domain_(std::move(domain)) {
  m_ = static_cast<int>(components_.size());
  if (d_ < 1) throw InvalidArgument("manifold: d must be at least 1");
  if (m_ < 1) throw InvalidArgument("manifold: need n > d");
  if (d_ + m_ > Polynomial::kMaxVars + 8) throw InvalidArgument("manifold: dimension too large");
  if (domain_.dim() != d_) throw InvalidArgument("manifold: domain dimension differs from d");
  int deg = 0;
  for (const auto& c : components_) {
    if (c.num_vars() != d_) throw InvalidArgument("manifold: component has wrong number of variables");
    deg = std::max(deg, c.degree());
  }
  if (deg <= 0) warnings_.push_back("degenerate map: every component is constant");
  l_max_ = std::max(1, deg);

  first_.reserve(static_cast<std::size_t>(d_) * m_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < m_; ++j) first_.push_back(components_[j].derivative(i));
  second_.reserve(static_cast<std::size_t>(d_) * d_ * m_);
  for (int i = 0; i < d_; ++i)
    for (int k = 0; k < d_; ++k)
      for (int j = 0; j < m_; ++j) second_.push_back(first_[i * m_ + j].derivative(k));

  double bound = 1.0;
  for (const auto& p : first_) bound = std::max(bound, p.sup_bound(domain_));
  for (const auto& p : second_) bound = std::max(bound, p.sup_bound(domain_));
  bound_m_ = bound;
}

bool ManifoldMap::in_domain(std::span<const double> x, double tol) const { return domain_.contains(x, tol); }

void ManifoldMap::eval_f(std::span<const double> x, std::span<double> out) const {
  for (int j = 0; j < m_; ++j) out[j] = components_[j](x);
}

std::vector<double> ManifoldMap::eval_f(std::span<const double> x) const {
  std::vector<double> out(m_);
  eval_f(x, out);
  return out;
}

std::vector<Rational> ManifoldMap::eval_f(std::span<const Rational> x) const {
  std::vector<Rational> out;
  out.reserve(m_);
  for (int j = 0; j < m_; ++j) out.push_back(components_[j](x));
  return out;
}

std::vector<double> ManifoldMap::full(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  out.resize(n());
  eval_f(x, std::span<double>(out).subspan(d_));
  return out;
}

double ManifoldMap::first_partial(int i, int j, std::span<const double> x) const { return first_[i * m_ + j](x); }

Rational ManifoldMap::first_partial(int i, int j, std::span<const Rational> x) const {
  return first_[i * m_ + j](x);
}

double ManifoldMap::second_partial(int i, int k, int j, std::span<const double> x) const {
  return second_[(i * d_ + k) * m_ + j](x);
}

double ManifoldMap::partial(std::span<const int> beta, int j, std::span<const double> x) const {
  int order = 0;
  for (int b : beta) order += b;
  if (order > l_max_) throw CapabilityError("derivative order exceeds l_max");
  return components_.at(j).partial(beta)(x);
}

Rational ManifoldMap::partial(std::span<const int> beta, int j, std::span<const Rational> x) const {
  int order = 0;
  for (int b : beta) order += b;
  if (order > l_max_) throw CapabilityError("derivative order exceeds l_max");
  return components_.at(j).partial(beta)(x);
}

Matrix<double> ManifoldMap::jacobian(std::span<const double> x) const {
  if (!in_domain(x, 1e-9)) throw InvalidArgument("jacobian: point outside the working domain");
  Matrix<double> J(d_, m_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < m_; ++j) J(i, j) = first_partial(i, j, x);
  return J;
}

Matrix<Rational> ManifoldMap::jacobian(std::span<const Rational> x) const {
  Matrix<Rational> J(d_, m_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < m_; ++j) J(i, j) = first_partial(i, j, x);
  return J;
}

ManifoldMap ManifoldMap::with_domain(Ball domain) const {
  return ManifoldMap(name_, d_, components_, std::move(domain));
}

ManifoldMap veronese(int n) {
  if (n < 2) throw InvalidArgument("veronese: n must be at least 2");
  std::vector<Polynomial> comps;
  for (int j = 2; j <= n; ++j) {
    Polynomial p(1);
    p.add_term({j}, 1);
    comps.push_back(p);
  }
  return ManifoldMap("veronese:" + std::to_string(n), 1, std::move(comps), Ball::interval(0.0, 1.0));
}

ManifoldMap paraboloid() {
  Polynomial p(2);
  p.add_term({2, 0}, 1);
  p.add_term({0, 2}, 1);
  return ManifoldMap("paraboloid", 2, {p}, Ball({0.0, 0.0}, 1.0));
}

ManifoldMap polynomial_monge(int d, int n, std::vector<Polynomial> components, Ball domain, std::string name) {
  if (d < 1 || n <= d) throw InvalidArgument("polynomial_monge: need 1 <= d < n");
  if (static_cast<int>(components.size()) != n - d)
    throw InvalidArgument("polynomial_monge: expected n - d component polynomials");
  return ManifoldMap(std::move(name), d, std::move(components), std::move(domain));
}

ManifoldMap map_from_json(const nlohmann::json& j) {
  try {
    const int d = j.at("dim_d").get<int>();
    const int n = j.at("dim_n").get<int>();
    std::vector<Polynomial> comps;
    for (const auto& poly : j.at("polynomials")) {
      Polynomial p(d);
      for (const auto& [key, value] : poly.items()) {
        std::vector<int> e;
        std::stringstream ss(key);
        std::string tok;
        while (std::getline(ss, tok, ',')) e.push_back(std::stoi(tok));
        Rational c = value.is_string() ? parse_rational(value.get<std::string>())
                                       : rational_from_double(value.get<double>());
        p.add_term(std::move(e), c);
      }
      comps.push_back(std::move(p));
    }
    const auto& dom = j.at("domain");
    Ball ball(dom.at("center").get<std::vector<double>>(), dom.at("radius").get<double>());
    std::string name = j.value("name", std::string("polynomial"));
    return polynomial_monge(d, n, std::move(comps), std::move(ball), std::move(name));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("map definition: ") + e.what());
  } catch (const std::logic_error& e) {
    throw InvalidArgument(std::string("map definition: ") + e.what());
  }
}

nlohmann::json map_to_json(const ManifoldMap& map) {
  nlohmann::json j;
  j["name"] = map.name();
  j["dim_d"] = map.d();
  j["dim_n"] = map.n();
  j["polynomials"] = nlohmann::json::array();
  for (int c = 0; c < map.m(); ++c) {
    nlohmann::json poly = nlohmann::json::object();
    for (const auto& t : map.component(c).terms()) {
      std::string key;
      for (std::size_t i = 0; i < t.exponents.size(); ++i) key += (i ? "," : "") + std::to_string(t.exponents[i]);
      poly[key] = to_string(t.coeff);
    }
    j["polynomials"].push_back(poly);
  }
  j["domain"] = {{"center", map.domain().center}, {"radius", map.domain().radius}};
  return j;
}

ManifoldMap load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open map file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("map file " + path + ": " + e.what());
  }
  return map_from_json(j);
}

ManifoldMap map_from_descriptor(const std::string& descriptor) {
  if (descriptor == "paraboloid") return paraboloid();
  if (descriptor.rfind("veronese:", 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(descriptor.substr(9));
    } catch (const std::exception&) {
      throw InvalidArgument("bad map descriptor " + descriptor);
    }
    return veronese(n);
  }
  if (descriptor.rfind("file:", 0) == 0) return load_map_file(descriptor.substr(5));
  throw InvalidArgument("unknown map descriptor " + descriptor);
}

std::vector<std::vector<int>> multi_indices(int d, int order) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(d, 0);
  fill_indices(d, order, 0, cur, out);
  return out;
}

std::optional<int> nondegeneracy_order(const ManifoldMap& map, std::span<const double> x, int l_cap,
                                       RankMode mode) {
  if (!map.in_domain(x, 1e-12)) throw InvalidArgument("nondegeneracy_order: point outside the working domain");
  if (l_cap > map.l_max()) throw CapabilityError("nondegeneracy_order: l_cap exceeds available derivative order");
  const int d = map.d();
  const int n = map.n();
  std::vector<std::vector<double>> rows_f;
  std::vector<std::vector<Rational>> rows_q;
  const auto xq = mode == RankMode::Exact ? to_rationals(x) : std::vector<Rational>{};
  for (int l = 1; l <= l_cap; ++l) {
    for (const auto& beta : multi_indices(d, l)) {
      if (mode == RankMode::Exact) {
        std::vector<Rational> row(n, 0);
        if (l == 1)
          for (int i = 0; i < d; ++i) row[i] = beta[i];
        for (int j = 0; j < map.m(); ++j) row[d + j] = map.partial(beta, j, std::span<const Rational>(xq));
        rows_q.push_back(std::move(row));
      } else {
        std::vector<double> row(n, 0.0);
        if (l == 1)
          for (int i = 0; i < d; ++i) row[i] = beta[i];
        for (int j = 0; j < map.m(); ++j) row[d + j] = map.partial(beta, j, x);
        rows_f.push_back(std::move(row));
      }
    }
    const int rank = mode == RankMode::Exact ? exact_rank(rows_q, n) : float_rank(rows_f, n);
    if (rank == n) return l;
  }
  return std::nullopt;
}

}  // namespace nearrat
