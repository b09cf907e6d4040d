#include "nearrat/counting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "nearrat/errors.hpp"
#include "nearrat/parallel.hpp"

namespace nearrat {

namespace {

constexpr int kMaxD = 8;
constexpr int kMaxM = 16;

std::int64_t snap_floor(double v) {
  const double r = std::nearbyint(v);
  if (std::fabs(v - r) <= 1e-9 * std::max(1.0, std::fabs(v))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(v));
}

std::int64_t snap_ceil(double v) {
  const double r = std::nearbyint(v);
  if (std::fabs(v - r) <= 1e-9 * std::max(1.0, std::fabs(v))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(v));
}

void check_inputs(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps, double t) {
  if (static_cast<int>(theta.size()) != map.n()) throw InvalidArgument("theta must have n coordinates");
  if (B.dim() != map.d()) throw InvalidArgument("ball dimension must equal d");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be positive");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("t must be non-negative");
  if (t > 40.0) throw BudgetExceeded("e^t beyond any enumeration budget");
  if (!map.domain().contains(B)) throw PreconditionError("ball must lie inside the working domain");
}

// Integer box of p_i candidates for (p_i + theta_i)/q in [lo - pad, hi + pad];
// one extra value on each side, the exact test is applied per candidate.
struct PBox {
  std::int64_t lo[kMaxD];
  std::int64_t hi[kMaxD];
  std::int64_t size = 0;
};

PBox p_box(const Ball& B, const std::vector<double>& theta, std::int64_t q, double pad) {
  PBox box;
  box.size = 1;
  const double qd = static_cast<double>(q);
  for (int i = 0; i < B.dim(); ++i) {
    box.lo[i] = static_cast<std::int64_t>(std::ceil(qd * (B.lo(i) - pad) - theta[i])) - 1;
    box.hi[i] = static_cast<std::int64_t>(std::floor(qd * (B.hi(i) + pad) - theta[i])) + 1;
    box.size *= std::max<std::int64_t>(0, box.hi[i] - box.lo[i] + 1);
  }
  return box;
}

std::int64_t total_cost(const Ball& B, const std::vector<double>& theta, std::int64_t q_lo, std::int64_t q_hi,
                        double pad_scale, std::int64_t budget) {
  if (q_hi < q_lo) return 0;
  if (q_hi - q_lo + 1 > budget) throw BudgetExceeded("q range alone exceeds the evaluation budget");
  std::int64_t cost = 0;
  for (std::int64_t q = q_lo; q <= q_hi; ++q) {
    cost += p_box(B, theta, q, pad_scale).size;
    if (cost > budget)
      throw BudgetExceeded("enumeration needs more than " + std::to_string(budget) + " candidate evaluations");
  }
  return cost;
}

std::vector<std::pair<std::int64_t, std::int64_t>> q_chunks(std::int64_t q_lo, std::int64_t q_hi) {
  if (q_hi < q_lo) return {};
  const std::int64_t span = q_hi - q_lo + 1;
  return split_range(q_lo, q_hi, std::max<std::int64_t>(1, span / 64));
}

// Visits every candidate p_d of the box in lexicographic order.
template <class Fn>
void for_each_pd(const PBox& box, int d, Fn&& fn) {
  if (box.size == 0) return;
  std::int64_t p[kMaxD];
  for (int i = 0; i < d; ++i) p[i] = box.lo[i];
  for (;;) {
    fn(p);
    int i = d - 1;
    while (i >= 0 && p[i] == box.hi[i]) {
      p[i] = box.lo[i];
      --i;
    }
    if (i < 0) return;
    ++p[i];
  }
}

template <class Emit>
void n_kernel(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps, std::int64_t q_lo,
              std::int64_t q_hi, Emit&& emit) {
  const int d = map.d(), m = map.m();
  double x[kMaxD];
  double fx[kMaxM];
  std::int64_t plo[kMaxM], phi[kMaxM];
  double blo[kMaxD], bhi[kMaxD];
  for (int i = 0; i < d; ++i) {
    blo[i] = B.lo(i) - kBallTol;
    bhi[i] = B.hi(i) + kBallTol;
  }
  for (std::int64_t q = q_lo; q <= q_hi; ++q) {
    const double qd = static_cast<double>(q);
    const PBox box = p_box(B, theta, q, 0.0);
    for_each_pd(box, d, [&](const std::int64_t* p) {
      for (int i = 0; i < d; ++i) x[i] = (static_cast<double>(p[i]) + theta[i]) / qd;
      for (int i = 0; i < d; ++i)
        if (x[i] < blo[i] || x[i] > bhi[i]) return;
      map.eval_f(std::span<const double>(x, d), std::span<double>(fx, m));
      for (int j = 0; j < m; ++j) {
        const double y = qd * fx[j] - theta[d + j];
        plo[j] = static_cast<std::int64_t>(std::ceil(y - eps - kTieTol));
        phi[j] = static_cast<std::int64_t>(std::floor(y + eps + kTieTol));
        if (phi[j] < plo[j]) return;
      }
      emit(q, p, plo, phi);
    });
  }
}

}  // namespace

Rational eta(int n, int d) {
  if (d < 1 || d >= n) throw InvalidArgument("eta: need 1 <= d < n");
  Rational r = d > 1 ? Rational(1, n - 1) : Rational(3, 2 * n - 1);
  r.canonicalize();
  return r;
}

Rational alpha(int n, int d, int l) {
  if (l < 1) throw InvalidArgument("alpha: l must be at least 1");
  if (d < 1 || d >= n) throw InvalidArgument("alpha: need 1 <= d < n");
  Rational r(1, d * (2 * l - 1) * (n + 1));
  r.canonicalize();
  return r;
}

std::pair<std::int64_t, std::int64_t> q_block(double t) {
  const std::int64_t hi = snap_floor(std::exp(t));
  const std::int64_t lo = std::max<std::int64_t>(1, snap_ceil(std::exp(t - 1.0)));
  return {lo, hi};
}

std::int64_t enumeration_cost(const Ball& B, const std::vector<double>& theta, std::int64_t q_lo, std::int64_t q_hi) {
  std::int64_t cost = 0;
  for (std::int64_t q = q_lo; q <= q_hi; ++q) cost += p_box(B, theta, q, 0.0).size;
  return cost;
}

std::vector<RationalWitness> enumerate_N(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B,
                                         double eps, double t, const CountOptions& opt) {
  check_inputs(map, theta, B, eps, t);
  const auto [q_lo, q_hi] = q_block(t);
  total_cost(B, theta, q_lo, q_hi, 0.0, opt.budget);
  const auto chunks = q_chunks(q_lo, q_hi);
  std::vector<std::vector<RationalWitness>> parts(chunks.size());
  const int d = map.d(), m = map.m();
  parallel_for(static_cast<std::int64_t>(chunks.size()), opt.workers, [&](std::int64_t c) {
    auto& out = parts[c];
    n_kernel(map, theta, B, eps, chunks[c].first, chunks[c].second,
             [&](std::int64_t q, const std::int64_t* pd, const std::int64_t* plo, const std::int64_t* phi) {
               std::vector<std::int64_t> pm(plo, plo + m);
               for (;;) {
                 RationalWitness w;
                 w.q = q;
                 w.p.assign(pd, pd + d);
                 w.p.insert(w.p.end(), pm.begin(), pm.end());
                 out.push_back(std::move(w));
                 int j = m - 1;
                 while (j >= 0 && pm[j] == phi[j]) {
                   pm[j] = plo[j];
                   --j;
                 }
                 if (j < 0) break;
                 ++pm[j];
               }
             });
  });
  std::vector<RationalWitness> all;
  for (auto& p : parts) all.insert(all.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  return all;
}

std::int64_t count_N(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps, double t,
                     const CountOptions& opt) {
  check_inputs(map, theta, B, eps, t);
  const auto [q_lo, q_hi] = q_block(t);
  total_cost(B, theta, q_lo, q_hi, 0.0, opt.budget);
  const auto chunks = q_chunks(q_lo, q_hi);
  std::vector<std::int64_t> parts(chunks.size(), 0);
  const int m = map.m();
  parallel_for(static_cast<std::int64_t>(chunks.size()), opt.workers, [&](std::int64_t c) {
    std::int64_t acc = 0;
    n_kernel(map, theta, B, eps, chunks[c].first, chunks[c].second,
             [&](std::int64_t, const std::int64_t*, const std::int64_t* plo, const std::int64_t* phi) {
               std::int64_t k = 1;
               for (int j = 0; j < m; ++j) k *= phi[j] - plo[j] + 1;
               acc += k;
             });
    parts[c] = acc;
  });
  std::int64_t total = 0;
  for (auto v : parts) total += v;
  return total;
}

CountInterval count_star_range(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta, double thr,
                               std::int64_t q_lo, std::int64_t q_hi, bool rigorous, const CountOptions& opt) {
  if (static_cast<int>(theta.size()) != map.n()) throw InvalidArgument("theta must have n coordinates");
  if (Delta.dim() != map.d()) throw InvalidArgument("ball dimension must equal d");
  if (!(thr > 0.0)) throw InvalidArgument("threshold must be positive");
  if (!map.domain().contains(Delta)) throw PreconditionError("ball must lie inside the working domain");
  q_lo = std::max<std::int64_t>(q_lo, 1);
  total_cost(Delta, theta, q_lo, q_hi, thr, opt.budget);
  const auto chunks = q_chunks(q_lo, q_hi);
  std::vector<CountInterval> parts(chunks.size());
  const int d = map.d(), m = map.m();
  const double widen = 1.0 + d * map.derivative_bound();
  parallel_for(static_cast<std::int64_t>(chunks.size()), opt.workers, [&](std::int64_t c) {
    double u[kMaxD];
    double fu[kMaxM];
    CountInterval acc;
    for (std::int64_t q = chunks[c].first; q <= chunks[c].second; ++q) {
      const double qd = static_cast<double>(q);
      const double reach = qd * thr + kTieTol;
      const PBox box = p_box(Delta, theta, q, thr);
      for_each_pd(box, d, [&](const std::int64_t* p) {
        for (int i = 0; i < d; ++i) {
          const double P = (static_cast<double>(p[i]) + theta[i]) / qd;
          u[i] = std::clamp(P, Delta.lo(i), Delta.hi(i));
          if (std::fabs(qd * u[i] - theta[i] - static_cast<double>(p[i])) > reach) return;
        }
        map.eval_f(std::span<const double>(u, d), std::span<double>(fu, m));
        std::int64_t lo = 1, hi = rigorous ? 1 : 0;
        for (int j = 0; j < m; ++j) {
          const double y = qd * fu[j] - theta[d + j];
          const std::int64_t a = static_cast<std::int64_t>(std::ceil(y - reach));
          const std::int64_t b = static_cast<std::int64_t>(std::floor(y + reach));
          lo *= std::max<std::int64_t>(0, b - a + 1);
          if (rigorous) {
            const double wide = qd * thr * widen + kTieTol;
            const std::int64_t a2 = static_cast<std::int64_t>(std::ceil(y - wide));
            const std::int64_t b2 = static_cast<std::int64_t>(std::floor(y + wide));
            hi *= std::max<std::int64_t>(0, b2 - a2 + 1);
          }
        }
        acc.lo += lo;
        acc.hi += rigorous ? hi : lo;
      });
    }
    parts[c] = acc;
  });
  CountInterval total;
  for (const auto& p : parts) {
    total.lo += p.lo;
    total.hi += p.hi;
  }
  return total;
}

std::int64_t count_N_star(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta, double eps,
                          double t, const CountOptions& opt) {
  const auto [q_lo, q_hi] = q_block(t);
  return count_star_range(map, theta, Delta, eps * std::exp(-t), q_lo, q_hi, false, opt).lo;
}

CountInterval count_N_star_rigorous(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta,
                                    double eps, double t, const CountOptions& opt) {
  const auto [q_lo, q_hi] = q_block(t);
  return count_star_range(map, theta, Delta, eps * std::exp(-t), q_lo, q_hi, true, opt);
}

std::vector<std::int64_t> count_N_total_blocks(const ManifoldMap& map, const std::vector<double>& theta,
                                               const Ball& Delta, double eps, double t, const CountOptions& opt) {
  if (!(t >= 0.0)) throw InvalidArgument("t must be non-negative");
  const double thr = eps * std::exp(-t);
  std::vector<std::int64_t> blocks;
  std::int64_t q_hi = snap_floor(std::exp(t));
  double s = t;
  std::int64_t spent = 0;
  while (q_hi >= 1) {
    const std::int64_t q_lo = std::max<std::int64_t>(1, snap_floor(std::exp(s - 1.0)) + 1);
    CountOptions block_opt = opt;
    block_opt.budget = opt.budget - spent;
    spent += total_cost(Delta, theta, q_lo, q_hi, thr, block_opt.budget);
    blocks.push_back(count_star_range(map, theta, Delta, thr, q_lo, q_hi, false, block_opt).lo);
    q_hi = q_lo - 1;
    s -= 1.0;
  }
  return blocks;
}

std::int64_t count_N_total(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta, double eps,
                           double t, const CountOptions& opt) {
  std::int64_t total = 0;
  for (auto b : count_N_total_blocks(map, theta, Delta, eps, t, opt)) total += b;
  return total;
}

std::int64_t visit_chunk_count(std::int64_t q_lo, std::int64_t q_hi) {
  return static_cast<std::int64_t>(q_chunks(std::max<std::int64_t>(q_lo, 1), q_hi).size());
}

void visit_N(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps, double t,
             const CountOptions& opt, const std::function<void(std::int64_t chunk, const NHit&)>& fn) {
  check_inputs(map, theta, B, eps, t);
  const auto [q_lo, q_hi] = q_block(t);
  total_cost(B, theta, q_lo, q_hi, 0.0, opt.budget);
  const auto chunks = q_chunks(q_lo, q_hi);
  const int m = map.m();
  parallel_for(static_cast<std::int64_t>(chunks.size()), opt.workers, [&](std::int64_t c) {
    n_kernel(map, theta, B, eps, chunks[c].first, chunks[c].second,
             [&](std::int64_t q, const std::int64_t* pd, const std::int64_t* plo, const std::int64_t* phi) {
               std::int64_t k = 1;
               for (int j = 0; j < m; ++j) k *= phi[j] - plo[j] + 1;
               fn(c, NHit{q, pd, plo, phi, k});
             });
  });
}

void visit_star_range(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta, double thr,
                      std::int64_t q_lo, std::int64_t q_hi, const CountOptions& opt,
                      const std::function<void(std::int64_t chunk, const StarHit&)>& fn) {
  if (static_cast<int>(theta.size()) != map.n()) throw InvalidArgument("theta must have n coordinates");
  if (Delta.dim() != map.d()) throw InvalidArgument("ball dimension must equal d");
  if (!(thr > 0.0)) throw InvalidArgument("threshold must be positive");
  if (!map.domain().contains(Delta)) throw PreconditionError("ball must lie inside the working domain");
  q_lo = std::max<std::int64_t>(q_lo, 1);
  total_cost(Delta, theta, q_lo, q_hi, thr, opt.budget);
  const auto chunks = q_chunks(q_lo, q_hi);
  const int d = map.d(), m = map.m();
  parallel_for(static_cast<std::int64_t>(chunks.size()), opt.workers, [&](std::int64_t c) {
    double u[kMaxD];
    double fu[kMaxM];
    for (std::int64_t q = chunks[c].first; q <= chunks[c].second; ++q) {
      const double qd = static_cast<double>(q);
      const double reach = qd * thr + kTieTol;
      const PBox box = p_box(Delta, theta, q, thr);
      for_each_pd(box, d, [&](const std::int64_t* p) {
        for (int i = 0; i < d; ++i) {
          const double P = (static_cast<double>(p[i]) + theta[i]) / qd;
          u[i] = std::clamp(P, Delta.lo(i), Delta.hi(i));
          if (std::fabs(qd * u[i] - theta[i] - static_cast<double>(p[i])) > reach) return;
        }
        map.eval_f(std::span<const double>(u, d), std::span<double>(fu, m));
        std::int64_t k = 1;
        for (int j = 0; j < m; ++j) {
          const double y = qd * fu[j] - theta[d + j];
          const std::int64_t a = static_cast<std::int64_t>(std::ceil(y - reach));
          const std::int64_t b = static_cast<std::int64_t>(std::floor(y + reach));
          k *= std::max<std::int64_t>(0, b - a + 1);
        }
        if (k > 0) fn(c, StarHit{q, p, u, k});
      });
    }
  });
}

double EpsRule::eps_at(double t) const { return scale * std::exp(-rho * t); }

std::vector<CountReport> scaling_sweep(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B,
                                       const std::vector<double>& t_list, const EpsRule& rule,
                                       const SweepOptions& opt) {
  const int n = map.n(), d = map.d(), m = map.m();
  int l = opt.l;
  if (l <= 0) {
    auto order = nondegeneracy_order(map, B.center, map.l_max());
    l = order.value_or(map.l_max());
  }
  const double a = alpha(n, d, l).get_d();
  const double et = eta(n, d).get_d();
  std::vector<CountReport> out;
  for (double t : t_list) {
    CountReport r;
    r.t = t;
    r.eps = rule.eps_at(t);
    const auto start = std::chrono::steady_clock::now();
    r.count = count_N(map, theta, B, r.eps, t, opt.count);
    r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.pred_main = std::pow(r.eps, m) * std::exp((d + 1) * t) * B.volume();
    r.pred_error_term = std::exp((d + 1) * t) * std::pow(std::pow(r.eps, n - 0.5) * std::exp(1.5 * t), -a);
    r.ratio = r.pred_main > 0 ? static_cast<double>(r.count) / r.pred_main : 0.0;
    r.range_warning = r.eps < opt.admissible_slack * std::exp(-et * t) || r.eps > 1.0;
    out.push_back(r);
  }
  return out;
}

}  // namespace nearrat
