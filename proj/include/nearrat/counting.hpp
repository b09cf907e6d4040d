#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nearrat/ball.hpp"
#include "nearrat/manifold.hpp"
#include "nearrat/rational.hpp"

namespace nearrat {

// (q, p) standing for the shifted rational point (p + theta) / q; p holds the
// d parameter coordinates followed by the m graph coordinates.
struct RationalWitness {
  std::int64_t q = 1;
  std::vector<std::int64_t> p;

  auto operator<=>(const RationalWitness&) const = default;
};

struct CountOptions {
  // Cap on candidate (q, p_d) evaluations per call.
  std::int64_t budget = 10'000'000;
  int workers = 1;
};

// Tolerances shared with the test oracles: boundary ties at exactly eps are
// inclusive up to kTieTol, membership of (p_d + theta_d)/q in B up to kBallTol.
inline constexpr double kTieTol = 1e-9;
inline constexpr double kBallTol = 1e-12;

Rational eta(int n, int d);
Rational alpha(int n, int d, int l);

// Integer q range [ceil(e^(t-1)), floor(e^t)], robust to e^t landing a few ulps
// away from an integer.
std::pair<std::int64_t, std::int64_t> q_block(double t);

// Candidate (q, p_d) evaluations the N-enumeration would perform.
std::int64_t enumeration_cost(const Ball& B, const std::vector<double>& theta, std::int64_t q_lo, std::int64_t q_hi);

// The set of (q, p_d, p_m) with e^(t-1) <= q <= e^t, (p_d + theta_d)/q in B and
// |q f((p_d + theta_d)/q) - theta_m - p_m| <= eps componentwise; sorted by
// (q, p_d, p_m).
std::vector<RationalWitness> enumerate_N(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B,
                                         double eps, double t, const CountOptions& opt = {});
// Same set, counted without materializing it.
std::int64_t count_N(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps, double t,
                     const CountOptions& opt = {});

struct CountInterval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

// Counts (p, q), q_lo <= q <= q_hi, with inf over x in Delta of
// |F(x) - (p + theta)/q| <= thr. `lo` uses the projection witness
// u = clamp(pi((p + theta)/q), Delta); `hi` admits every pair the derivative
// bound M cannot exclude.
CountInterval count_star_range(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta, double thr,
                               std::int64_t q_lo, std::int64_t q_hi, bool rigorous, const CountOptions& opt = {});

// N* over the block e^(t-1) <= q <= e^t with threshold eps / e^t.
std::int64_t count_N_star(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta, double eps,
                          double t, const CountOptions& opt = {});
CountInterval count_N_star_rigorous(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta,
                                    double eps, double t, const CountOptions& opt = {});

// N over 1 <= q <= e^t with threshold eps / e^t, summed over the blocks
// (e^(s-1), e^s], s = t, t-1, ...
std::int64_t count_N_total(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta, double eps,
                           double t, const CountOptions& opt = {});
// Per-block counts of count_N_total, outermost block first.
std::vector<std::int64_t> count_N_total_blocks(const ManifoldMap& map, const std::vector<double>& theta,
                                               const Ball& Delta, double eps, double t, const CountOptions& opt = {});

// Visitors for callers that aggregate witnesses without storing them. The q
// range is cut into visit_chunk_count(q_lo, q_hi) chunks; fn runs once per
// accepted p_d with its chunk index, possibly concurrently across chunks but
// sequentially and in (q, p_d) order within one.
std::int64_t visit_chunk_count(std::int64_t q_lo, std::int64_t q_hi);

// Elements of the N-set sharing (q, p_d): there are `multiplicity` of them,
// one for each p_m in the product of ranges [pm_lo_j, pm_hi_j].
struct NHit {
  std::int64_t q;
  const std::int64_t* p_d;
  const std::int64_t* pm_lo;
  const std::int64_t* pm_hi;
  std::int64_t multiplicity;
};
void visit_N(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps, double t,
             const CountOptions& opt, const std::function<void(std::int64_t chunk, const NHit&)>& fn);

// Pairs counted by count_star_range (witness mode) sharing (q, p_d); u is
// the projection witness in Delta.
struct StarHit {
  std::int64_t q;
  const std::int64_t* p_d;
  const double* u;
  std::int64_t multiplicity;
};
void visit_star_range(const ManifoldMap& map, const std::vector<double>& theta, const Ball& Delta, double thr,
                      std::int64_t q_lo, std::int64_t q_hi, const CountOptions& opt,
                      const std::function<void(std::int64_t chunk, const StarHit&)>& fn);

// eps = scale * e^(-rho t).
struct EpsRule {
  double rho = 0.0;
  double scale = 1.0;
  double eps_at(double t) const;
};

struct CountReport {
  double t = 0;
  double eps = 0;
  std::int64_t count = 0;
  double pred_main = 0;        // eps^m e^((d+1)t) vol(B)
  double pred_error_term = 0;  // e^((d+1)t) (eps^(n-1/2) e^(3t/2))^(-alpha)
  double ratio = 0;
  bool range_warning = false;
  double elapsed_s = 0;
};

struct SweepOptions {
  CountOptions count;
  // eps below admissible_slack * e^(-eta t) sets the range warning.
  double admissible_slack = 1.0;
  // Derivative order used for alpha; 0 picks the nondegeneracy order at the
  // center of B.
  int l = 0;
};

std::vector<CountReport> scaling_sweep(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B,
                                       const std::vector<double>& t_list, const EpsRule& rule,
                                       const SweepOptions& opt = {});

}  // namespace nearrat
