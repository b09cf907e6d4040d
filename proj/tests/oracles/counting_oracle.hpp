#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nearrat/counting.hpp"

namespace nearrat::oracle {

// Plain triple loop over q, p_d and p_m boxes wide enough to hold every
// solution; uses the same tie and membership tolerances as the library.
// Upper bound on the number of (q, p) candidates brute_N visits.
inline double brute_cost(const ManifoldMap& map, const Ball& B, double eps, std::int64_t q_lo, std::int64_t q_hi) {
  const int d = map.d(), m = map.m();
  const double spread = map.derivative_bound() * d * B.radius + 1.0;
  double fspan = 0;
  for (double v : map.eval_f(std::span<const double>(B.center))) fspan = std::max(fspan, std::fabs(v) + spread);
  double total = 0;
  for (std::int64_t q = q_lo; q <= q_hi; ++q) {
    double cells = std::pow(2 * q * B.radius + 6, d);
    total += cells * std::pow(2 * q * fspan + 2 * eps + 16, m);
  }
  return total;
}

inline std::vector<RationalWitness> brute_N(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B,
                                     double eps, std::int64_t q_lo, std::int64_t q_hi, std::int64_t* candidates) {
  const int d = map.d(), m = map.m();
  double fmin = 1e300, fmax = -1e300;
  // bound |f| over B coarsely through the declared derivative bound
  const auto fc = map.eval_f(std::span<const double>(B.center));
  const double spread = map.derivative_bound() * d * B.radius + 1.0;
  for (double v : fc) {
    fmin = std::min(fmin, v - spread);
    fmax = std::max(fmax, v + spread);
  }
  std::vector<RationalWitness> out;
  *candidates = 0;
  for (std::int64_t q = q_lo; q <= q_hi; ++q) {
    std::vector<std::int64_t> lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
      lo[i] = static_cast<std::int64_t>(std::floor(q * B.lo(i) - theta[i])) - 2;
      hi[i] = static_cast<std::int64_t>(std::ceil(q * B.hi(i) - theta[i])) + 2;
    }
    const std::int64_t pm_lo = static_cast<std::int64_t>(std::floor(q * fmin - eps)) - 3 - 4;
    const std::int64_t pm_hi = static_cast<std::int64_t>(std::ceil(q * fmax + eps)) + 3 + 4;
    std::vector<std::int64_t> pd = lo;
    for (;;) {
      std::vector<double> x(d);
      for (int i = 0; i < d; ++i) x[i] = (pd[i] + theta[i]) / static_cast<double>(q);
      if (B.contains(x, kBallTol)) {
        const auto f = map.eval_f(std::span<const double>(x));
        std::vector<std::int64_t> pm(m, pm_lo);
        for (;;) {
          ++*candidates;
          bool ok = true;
          for (int j = 0; j < m && ok; ++j)
            ok = std::fabs(q * f[j] - theta[d + j] - static_cast<double>(pm[j])) <= eps + kTieTol;
          if (ok) {
            RationalWitness w{q, pd};
            w.p.insert(w.p.end(), pm.begin(), pm.end());
            out.push_back(w);
          }
          int j = m - 1;
          while (j >= 0 && pm[j] == pm_hi) pm[j--] = pm_lo;
          if (j < 0) break;
          ++pm[j];
        }
      }
      int i = d - 1;
      while (i >= 0 && pd[i] == hi[i]) {
        pd[i] = lo[i];
        --i;
      }
      if (i < 0) break;
      ++pd[i];
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace nearrat::oracle
