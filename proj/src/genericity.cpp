#include "nearrat/genericity.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "nearrat/errors.hpp"
#include "nearrat/lattice.hpp"
#include "nearrat/nondivergence.hpp"
#include "nearrat/parallel.hpp"
#include "nearrat/sampling.hpp"

namespace nearrat {

namespace {

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

struct VecHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (auto x : v) h ^= std::hash<std::int64_t>()(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0;
  const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(k, 1, sorted.size()) - 1];
}

}  // namespace

Matrix<double> raw_special_basis(const ManifoldMap& map, std::span<const double> x, double eps, double t) {
  const int n = map.n(), m = map.m(), d = map.d();
  return d_eps(eps, n, m, d) * b_t(t, n, m, d) * g_eps_t(eps, t, n) * u1_matrix<double>(map, x);
}

GenericityVerdict classify(const ManifoldMap& map, std::span<const double> x, double eps, double t,
                           const MinimaOptions& opt) {
  if (!map.in_domain(x, 1e-9)) throw InvalidArgument("classify: point outside the working domain");
  GenericityVerdict v;
  v.x.assign(x.begin(), x.end());
  v.delta_last = delta_last(raw_special_basis(map, x, eps, t), opt);
  v.threshold = phi_factor(eps, t, map.n()) * std::exp(h_factor(t, map.n(), map.d()));
  v.special = v.delta_last > v.threshold;
  return v;
}

double special_radius(double eps, double t) { return std::sqrt(eps) * std::exp(-t / 2); }

SpecialCover::SpecialCover(Ball region, int per_axis, double radius, std::vector<std::uint8_t> special)
    : region_(std::move(region)), per_axis_(per_axis), radius_(radius), special_(std::move(special)) {
  if (static_cast<std::int64_t>(special_.size()) != ipow(per_axis_, region_.dim()))
    throw InvalidArgument("special cover: mask size does not match the grid");
  pitch_ = region_.side() / per_axis_;
  reach_ = pitch_ > 0 ? static_cast<int>(std::ceil(radius_ / pitch_)) : 0;
  for (auto s : special_) special_count_ += s;
}

std::vector<double> SpecialCover::cell_center(std::int64_t index) const {
  std::vector<double> c;
  grid_point(region_, per_axis_, index, c);
  return c;
}

std::vector<std::vector<double>> SpecialCover::centers() const {
  std::vector<std::vector<double>> out;
  for (std::int64_t i = 0; i < grid_points(); ++i)
    if (special_[i]) out.push_back(cell_center(i));
  return out;
}

std::vector<Ball> SpecialCover::balls() const {
  std::vector<Ball> out;
  for (auto& c : centers()) out.emplace_back(std::move(c), radius_);
  return out;
}

bool SpecialCover::covers(std::span<const double> x) const {
  if (special_count_ == 0) return false;
  const int d = region_.dim();
  std::vector<int> lo(d), hi(d), k(d);
  for (int a = 0; a < d; ++a) {
    if (x[a] <= region_.lo(a) - radius_ || x[a] >= region_.hi(a) + radius_) return false;
    const int home = pitch_ > 0 ? static_cast<int>(std::floor((x[a] - region_.lo(a)) / pitch_)) : 0;
    lo[a] = std::max(0, home - reach_ - 1);
    hi[a] = std::min(per_axis_ - 1, home + reach_ + 1);
    if (lo[a] > hi[a]) return false;
    k[a] = lo[a];
  }
  for (;;) {
    std::int64_t index = 0, stride = 1;
    for (int a = 0; a < d; ++a) {
      index += k[a] * stride;
      stride *= per_axis_;
    }
    if (special_[index]) {
      double dist = 0;
      for (int a = 0; a < d; ++a) {
        const double c = region_.lo(a) + region_.side() * (k[a] + 0.5) / per_axis_;
        dist = std::max(dist, std::fabs(x[a] - c));
      }
      if (dist < radius_) return true;
    }
    int a = 0;
    while (a < d && k[a] == hi[a]) {
      k[a] = lo[a];
      ++a;
    }
    if (a == d) return false;
    ++k[a];
  }
}

double SpecialCover::measure() const {
  const int d = region_.dim();
  std::vector<std::uint8_t> marked(special_.size(), 0);
  std::vector<int> g(d), off(d);
  for (std::int64_t i = 0; i < grid_points(); ++i) {
    if (!special_[i]) continue;
    std::int64_t rem = i;
    for (int a = 0; a < d; ++a) {
      g[a] = static_cast<int>(rem % per_axis_);
      rem /= per_axis_;
      off[a] = -reach_;
    }
    for (;;) {
      bool inside = true;
      std::int64_t index = 0, stride = 1;
      for (int a = 0; a < d && inside; ++a) {
        const int c = g[a] + off[a];
        inside = c >= 0 && c < per_axis_ && std::abs(off[a]) * pitch_ < radius_;
        index += c * stride;
        stride *= per_axis_;
      }
      if (inside) marked[index] = 1;
      int a = 0;
      while (a < d && off[a] == reach_) {
        off[a] = -reach_;
        ++a;
      }
      if (a == d) break;
      ++off[a];
    }
  }
  std::int64_t count = 0;
  for (auto v : marked) count += v;
  return static_cast<double>(count) * region_.volume() / static_cast<double>(grid_points());
}

int cover_grid_per_axis(const Ball& B, double eps, double t) {
  const double pitch = special_radius(eps, t) / 2;
  return std::max(1, static_cast<int>(std::ceil(B.side() / pitch)));
}

SpecialCover special_cover(const ManifoldMap& map, const Ball& B, double eps, double t, int per_axis, int workers,
                           const MinimaOptions& opt) {
  if (B.dim() != map.d()) throw InvalidArgument("special_cover: ball dimension must equal d");
  if (per_axis < 1) throw InvalidArgument("special_cover: need at least one cell per axis");
  const double radius = special_radius(eps, t);
  if (B.side() / per_axis > radius) throw PreconditionError("special_cover: grid pitch exceeds the thickening radius");
  const std::int64_t total = ipow(per_axis, B.dim());
  std::vector<std::uint8_t> special(static_cast<std::size_t>(total), 0);
  const std::int64_t chunks = (total + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, workers, [&](std::int64_t c) {
    std::vector<double> x;
    const std::int64_t end = std::min(total, (c + 1) * kSampleChunk);
    for (std::int64_t i = c * kSampleChunk; i < end; ++i) {
      grid_point(B, per_axis, i, x);
      special[i] = classify(map, x, eps, t, opt).special ? 1 : 0;
    }
  });
  return SpecialCover(B, per_axis, radius, std::move(special));
}

std::vector<double> dyadic_c_grid(int max_exponent) {
  std::vector<double> g;
  for (int k = 0; k <= max_exponent; ++k) g.push_back(std::ldexp(1.0, k));
  return g;
}

std::optional<double> check_inclusion(const ManifoldMap& map, std::span<const double> x, double eps, double t,
                                      const std::vector<double>& c_grid) {
  for (double c : c_grid)
    if (witness_S(map, x, inclusion_family(map.n(), eps, t, c)).has_value()) return c;
  return std::nullopt;
}

InclusionSummary summarize_inclusion(const ManifoldMap& map, const SpecialCover& cover, double eps, double t,
                                     const std::vector<double>& c_grid, int workers) {
  const auto centers = cover.centers();
  std::vector<double> found(centers.size(), -1);
  parallel_for(static_cast<std::int64_t>(centers.size()), workers, [&](std::int64_t i) {
    if (auto c = check_inclusion(map, centers[i], eps, t, c_grid)) found[i] = *c;
  });
  InclusionSummary s;
  s.special_points = static_cast<std::int64_t>(centers.size());
  for (double c : found)
    if (c > 0) s.c_values.push_back(c);
  s.included = static_cast<std::int64_t>(s.c_values.size());
  auto sorted = s.c_values;
  std::sort(sorted.begin(), sorted.end());
  s.c_median = percentile(sorted, 0.5);
  s.c_p95 = percentile(sorted, 0.95);
  s.c_max = sorted.empty() ? 0 : sorted.back();
  return s;
}

GenericCount count_generic(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps,
                           double t, const SpecialCover& cover, const CountOptions& opt) {
  if (!(t >= 0.0) || t > 40) throw InvalidArgument("count_generic: t must lie in [0, 40]");
  if (!(eps > 0)) throw InvalidArgument("count_generic: eps must be positive");
  const int d = map.d(), m = map.m(), n = map.n();
  const std::int64_t q_hi = q_block(t).second;
  const double tile = 2 * std::sqrt(eps * std::exp(-t));
  const std::int64_t per = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(B.side() / tile)));
  const std::int64_t chunks = visit_chunk_count(1, q_hi);
  struct Part {
    std::int64_t total = 0, generic = 0;
    std::unordered_map<std::int64_t, std::int64_t> tiles;
  };
  std::vector<Part> parts(static_cast<std::size_t>(std::max<std::int64_t>(chunks, 1)));
  visit_star_range(map, theta, B, eps * std::exp(-t), 1, q_hi, opt, [&](std::int64_t c, const StarHit& h) {
    auto& p = parts[c];
    p.total += h.multiplicity;
    if (cover.covers(std::span<const double>(h.u, d))) return;
    p.generic += h.multiplicity;
    std::int64_t key = 0, stride = 1;
    for (int a = 0; a < d; ++a) {
      const auto k = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((h.u[a] - B.lo(a)) / tile)), 0,
                                              per - 1);
      key += k * stride;
      stride *= per;
    }
    p.tiles[key] += h.multiplicity;
  });
  GenericCount g;
  std::unordered_map<std::int64_t, std::int64_t> tiles;
  for (auto& p : parts) {
    g.total += p.total;
    g.generic += p.generic;
    for (auto [k, v] : p.tiles) tiles[k] += v;
  }
  for (auto [k, v] : tiles) g.tile_max = std::max(g.tile_max, v);
  g.tiles = ipow(per, d);
  g.prediction = std::exp(m * std::log(eps) + (d + 1) * t) * B.volume();
  g.ratio = g.prediction > 0 ? static_cast<double>(g.generic) / g.prediction : 0;
  g.tile_bound = std::exp(n * std::log(eps) + t - 0.5 * d * (std::log(eps) - t));
  return g;
}

double lower_bound_rho(double eps, double t, int m, int d, double C0) {
  return C0 * std::exp(-(m * std::log(eps) + (d + 1) * t) / d);
}

LowerBoundCell classify_G(const ManifoldMap& map, std::span<const double> x, double v, double t, double eps,
                          const MinimaOptions& opt) {
  if (!map.in_domain(x, 1e-9)) throw InvalidArgument("classify_G: point outside the working domain");
  const int n = map.n(), m = map.m(), d = map.d();
  const auto a = a_eps_t_v(eps, t, v, n, m, d);
  std::vector<double> inv(n + 1);
  for (int i = 0; i <= n; ++i) inv[i] = 1.0 / a(i, i);
  LowerBoundCell cell;
  cell.x.assign(x.begin(), x.end());
  cell.delta1 = delta1(Matrix<double>::diagonal(inv) * u1_matrix<double>(map, x), opt);
  // (a^-1)* = sigma a sigma for diagonal a
  const auto w = weyl<double>(n + 1);
  cell.delta1_dual = delta1(w * a * w * dual_u1_closed_form<double>(map, x), opt);
  cell.in_G = cell.delta1 >= v;
  cell.rho = lower_bound_rho(eps, t, m, d, 1.0 / (2 * std::pow(v, n + 1)));
  return cell;
}

CoverFraction delta_cover_fraction(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps,
                                   double t, double rho, std::int64_t grid_n, const CountOptions& opt) {
  if (!(rho > 0)) throw InvalidArgument("delta_cover_fraction: rho must be positive");
  const int d = map.d();
  const auto [q_lo, q_hi] = q_block(t);
  std::vector<std::vector<double>> parts(static_cast<std::size_t>(std::max<std::int64_t>(1, visit_chunk_count(q_lo, q_hi))));
  visit_N(map, theta, B, eps, t, opt, [&](std::int64_t c, const NHit& h) {
    for (int i = 0; i < d; ++i) parts[c].push_back((static_cast<double>(h.p_d[i]) + theta[i]) / static_cast<double>(h.q));
  });
  std::vector<double> pts;
  for (auto& p : parts) pts.insert(pts.end(), p.begin(), p.end());
  CoverFraction out;
  out.centers = static_cast<std::int64_t>(pts.size()) / d;
  if (out.centers == 0) return out;
  if (B.radius == 0) {
    out.fraction = 1;
    out.exact = true;
    return out;
  }
  if (d == 1) {
    std::sort(pts.begin(), pts.end());
    double covered = 0, cur_lo = 0, cur_hi = 0;
    bool open = false;
    for (double c : pts) {
      const double lo = std::max(B.lo(0), c - rho), hi = std::min(B.hi(0), c + rho);
      if (hi <= lo) continue;
      if (open && lo <= cur_hi) {
        cur_hi = std::max(cur_hi, hi);
      } else {
        if (open) covered += cur_hi - cur_lo;
        cur_lo = lo;
        cur_hi = hi;
        open = true;
      }
    }
    if (open) covered += cur_hi - cur_lo;
    out.fraction = std::min(1.0, covered / B.side());
    out.exact = true;
    return out;
  }
  const double w = std::max(rho, B.side() / 1e6);
  std::unordered_map<std::vector<std::int64_t>, std::vector<std::int64_t>, VecHash> buckets;
  std::vector<std::int64_t> key(d);
  for (std::int64_t i = 0; i < out.centers; ++i) {
    for (int a = 0; a < d; ++a) key[a] = static_cast<std::int64_t>(std::floor((pts[i * d + a] - B.lo(a)) / w));
    buckets[key].push_back(i);
  }
  const int reach = static_cast<int>(std::ceil(rho / w));
  const auto est = estimate_measure(B, Sampler::grid(grid_n), opt.workers, [&](const std::vector<double>& x) {
    std::vector<std::int64_t> home(d), k(d);
    for (int a = 0; a < d; ++a) {
      home[a] = static_cast<std::int64_t>(std::floor((x[a] - B.lo(a)) / w));
      k[a] = home[a] - reach;
    }
    for (;;) {
      auto it = buckets.find(k);
      if (it != buckets.end())
        for (auto i : it->second) {
          double dist = 0;
          for (int a = 0; a < d; ++a) dist = std::max(dist, std::fabs(x[a] - pts[i * d + a]));
          if (dist < rho) return true;
        }
      int a = 0;
      while (a < d && k[a] == home[a] + reach) {
        k[a] = home[a] - reach;
        ++a;
      }
      if (a == d) return false;
      ++k[a];
    }
  });
  out.fraction = est.value / B.volume();
  return out;
}

}  // namespace nearrat
