#include "nearrat/nondivergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nearrat/counting.hpp"
#include "nearrat/errors.hpp"

namespace nearrat {

namespace {

constexpr int kMaxN = 16;

std::int64_t strict_bound(double T) {
  // largest integer with |a| < T
  if (!(T > 0)) return -1;
  return static_cast<std::int64_t>(std::ceil(T)) - 1;
}

struct LocalData {
  int d, m, n;
  double F[kMaxN];
  double J[8][kMaxN];  // J[i][k] = d_i f_k
};

LocalData local_data(const ManifoldMap& map, std::span<const double> x) {
  LocalData L;
  L.d = map.d();
  L.m = map.m();
  L.n = map.n();
  for (int i = 0; i < L.d; ++i) L.F[i] = x[i];
  map.eval_f(x, std::span<double>(L.F + L.d, L.m));
  for (int i = 0; i < L.d; ++i)
    for (int k = 0; k < L.m; ++k) L.J[i][k] = map.first_partial(i, k, x);
  return L;
}

}  // namespace

bool SBoxParams::admissible() const {
  if (!(delta > 0 && delta <= 1) || !(K > 0) || T.empty()) return false;
  double prod = 1, mx = 0;
  for (double t : T) {
    if (!(t >= 1)) return false;
    prod *= t;
    mx = std::max(mx, t);
  }
  return std::pow(delta, static_cast<double>(T.size())) < K * prod / mx;
}

double SBoxParams::volume_term() const {
  double prod = 1, mx = 0;
  for (double t : T) {
    prod *= t;
    mx = std::max(mx, t);
  }
  return delta * K * prod / mx;
}

std::optional<SWitness> witness_S(const ManifoldMap& map, std::span<const double> x, const SBoxParams& params,
                                  const WitnessOptions& opt) {
  const int d = map.d(), m = map.m(), n = map.n();
  if (static_cast<int>(params.T.size()) != n) throw InvalidArgument("witness_S: T must have n entries");
  if (!map.in_domain(x, 1e-9)) throw InvalidArgument("witness_S: point outside the working domain");
  const LocalData L = local_data(map, x);
  std::int64_t amax[kMaxN];
  double tails = 1;
  for (int i = 0; i < n; ++i) {
    amax[i] = strict_bound(params.T[i]);
    if (amax[i] < 0) return std::nullopt;
    if (i >= d) tails *= static_cast<double>(2 * amax[i] + 1);
  }
  if (tails > static_cast<double>(opt.budget)) throw BudgetExceeded("witness_S: T-box exceeds the search budget");

  std::int64_t examined = 0;
  std::int64_t best_s = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> best;
  std::int64_t best_a0 = 0;
  std::int64_t a[kMaxN];
  for (int k = 0; k < m; ++k) a[d + k] = -amax[d + k];
  double s[8];
  std::int64_t lo[8], hi[8];
  for (;;) {
    std::int64_t ts = 0;
    for (int k = 0; k < m; ++k) ts = std::max<std::int64_t>(ts, std::llabs(a[d + k]));
    bool feasible = ts <= best_s;
    for (int i = 0; i < d && feasible; ++i) {
      s[i] = 0;
      for (int k = 0; k < m; ++k) s[i] += L.J[i][k] * static_cast<double>(a[d + k]);
      const std::int64_t cap = std::min(amax[i], best_s);
      lo[i] = std::max<std::int64_t>(-cap, static_cast<std::int64_t>(std::floor(-params.K - s[i])) + 1);
      hi[i] = std::min<std::int64_t>(cap, static_cast<std::int64_t>(std::ceil(params.K - s[i])) - 1);
      if (lo[i] > hi[i]) feasible = false;
    }
    if (feasible) {
      for (int i = 0; i < d; ++i) a[i] = lo[i];
      for (;;) {
        if (++examined > opt.budget) throw BudgetExceeded("witness_S: search budget exhausted");
        bool nonzero = false, grad_ok = true;
        std::int64_t norm = 0;
        for (int i = 0; i < n; ++i) {
          nonzero |= a[i] != 0;
          norm = std::max<std::int64_t>(norm, std::llabs(a[i]));
        }
        for (int i = 0; i < d && grad_ok; ++i) grad_ok = std::fabs(static_cast<double>(a[i]) + s[i]) < params.K;
        if (nonzero && grad_ok && norm <= best_s) {
          double v = 0;
          for (int i = 0; i < n; ++i) v += L.F[i] * static_cast<double>(a[i]);
          const double a0 = std::nearbyint(-v);
          if (std::fabs(a0 + v) < params.delta) {
            std::vector<std::int64_t> cand(a, a + n);
            if (norm < best_s || cand < best) {
              best_s = norm;
              best = std::move(cand);
              best_a0 = static_cast<std::int64_t>(a0);
            }
          }
        }
        int i = d - 1;
        while (i >= 0 && a[i] == hi[i]) {
          a[i] = lo[i];
          --i;
        }
        if (i < 0) break;
        ++a[i];
      }
    }
    int k = m - 1;
    while (k >= 0 && a[d + k] == amax[d + k]) {
      a[d + k] = -amax[d + k];
      --k;
    }
    if (k < 0) break;
    ++a[d + k];
  }
  if (best.empty()) return std::nullopt;
  return SWitness{best_a0, best};
}

FormValues form_values(const ManifoldMap& map, std::span<const double> x, std::span<const std::int64_t> a) {
  if (static_cast<int>(a.size()) != map.n()) throw InvalidArgument("form_values: a must have n entries");
  const LocalData L = local_data(map, x);
  FormValues fv;
  double v = 0;
  for (int i = 0; i < L.n; ++i) {
    v += L.F[i] * static_cast<double>(a[i]);
    fv.sup_a = std::max(fv.sup_a, std::fabs(static_cast<double>(a[i])));
  }
  fv.a0 = static_cast<std::int64_t>(std::nearbyint(-v));
  fv.value = std::fabs(static_cast<double>(fv.a0) + v);
  for (int i = 0; i < L.d; ++i) {
    double g = static_cast<double>(a[i]);
    for (int k = 0; k < L.m; ++k) g += L.J[i][k] * static_cast<double>(a[L.d + k]);
    fv.gradient = std::max(fv.gradient, std::fabs(g));
  }
  return fv;
}

MeasureSReport measure_S(const ManifoldMap& map, const Ball& B, const SBoxParams& params, const Sampler& sampler,
                         int workers, const WitnessOptions& opt, int l) {
  if (B.dim() != map.d()) throw InvalidArgument("measure_S: ball dimension must equal d");
  if (!map.domain().contains(B)) throw PreconditionError("measure_S: ball must lie inside the working domain");
  MeasureSReport rep;
  rep.admissible = params.admissible();
  rep.estimate = estimate_measure(B, sampler, workers,
                                  [&](const std::vector<double>& x) { return witness_S(map, x, params, opt).has_value(); });
  if (l <= 0) l = nondegeneracy_order(map, B.center, map.l_max()).value_or(map.l_max());
  const int d = map.d(), n = map.n();
  rep.alpha = alpha(n, d, l).get_d();
  double prod = 1, mx = 0;
  for (double t : params.T) {
    prod *= t;
    mx = std::max(mx, t);
  }
  double main = params.delta * B.volume();
  for (int i = 0; i < n; ++i) main *= i < d ? std::min(params.K, params.T[i]) : params.T[i];
  rep.rhs_sharp_main = main;
  const double inv_r = B.radius > 0 ? 1.0 / B.radius : std::numeric_limits<double>::infinity();
  rep.rhs_sharp_tail = std::pow(params.delta * std::min(params.K, inv_r) * prod / mx, rep.alpha);
  rep.rhs_km = std::pow(params.volume_term(), rep.alpha) * B.volume();
  return rep;
}

S1Report measure_S1_1d(const Polynomial& F, int k, double delta, double Theta, const Ball& I, std::int64_t grid_n,
                       int workers) {
  if (F.num_vars() != 1 || I.dim() != 1) throw InvalidArgument("measure_S1_1d: univariate function and interval required");
  if (k < 1) throw InvalidArgument("measure_S1_1d: k must be at least 1");
  if (!(Theta >= 0.5)) throw InvalidArgument("measure_S1_1d: Theta must be at least 1/2");
  if (!(delta > 0)) throw InvalidArgument("measure_S1_1d: delta must be positive");
  if (!(I.radius > 0)) throw InvalidArgument("measure_S1_1d: interval must have positive length");
  Polynomial Fk = F;
  for (int i = 0; i < k; ++i) Fk = Fk.derivative(0);
  const Polynomial dF = F.derivative(0);
  {
    // F^(k) must keep one sign and stay away from 0 on I.
    double lo_v = std::numeric_limits<double>::infinity(), hi_v = -lo_v;
    const std::int64_t checks = std::min<std::int64_t>(grid_n, 100000);
    for (std::int64_t i = 0; i <= checks; ++i) {
      const double x[] = {I.lo(0) + I.side() * static_cast<double>(i) / static_cast<double>(checks)};
      const double v = Fk(std::span<const double>(x, 1));
      lo_v = std::min(lo_v, v);
      hi_v = std::max(hi_v, v);
    }
    if (!(lo_v > 0 || hi_v < 0)) throw PreconditionError("measure_S1_1d: k-th derivative vanishes or changes sign on I");
  }
  const double L = I.side();
  const double slope = 1.0 / (Theta * L);
  S1Report rep;
  rep.estimate = estimate_measure(I, Sampler::grid(grid_n), workers, [&](const std::vector<double>& x) {
    const double v = F(std::span<const double>(x.data(), 1));
    const double dist = std::fabs(v - std::nearbyint(v));
    return dist < delta && std::fabs(dF(std::span<const double>(x.data(), 1))) > slope;
  });
  rep.bound = 8.0 * k * Theta * delta * L;
  return rep;
}

bool witness_Sdd(const ManifoldMap& map, std::span<const double> x, double delta, std::span<const std::int64_t> a,
                 double G) {
  if (std::all_of(a.begin(), a.end(), [](std::int64_t v) { return v == 0; }))
    throw InvalidArgument("witness_Sdd: a must be nonzero");
  const auto fv = form_values(map, x, a);
  return fv.value < delta && fv.gradient >= G;
}

MeasureEstimate measure_Sdd(const ManifoldMap& map, const Ball& B, double delta, std::span<const std::int64_t> a,
                            double G, const Sampler& sampler, int workers) {
  std::vector<std::int64_t> av(a.begin(), a.end());
  return estimate_measure(B, sampler, workers,
                          [&](const std::vector<double>& x) { return witness_Sdd(map, x, delta, av, G); });
}

SBoxParams lower_bound_family(int n, int m, int d, double eps, double t, double c) {
  SBoxParams p;
  p.delta = c * std::exp(-t);
  p.K = c * std::exp((m * std::log(eps) + t) / d);
  p.T.assign(n, c / eps);
  return p;
}

SBoxParams inclusion_family(int n, double eps, double t, double c) {
  SBoxParams p;
  p.delta = c * std::exp(-t);
  p.K = c / std::sqrt(eps) * std::exp(-t / 2);
  p.T.assign(n, c / eps);
  return p;
}

}  // namespace nearrat
