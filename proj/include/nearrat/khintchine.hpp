#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "nearrat/manifold.hpp"
#include "nearrat/rational.hpp"

namespace nearrat {

// psi(q) = q^-tau, or a table of (q_i, psi_i) read as right-constant steps
// (the value at q is that of the last q_i <= q, the first value before q_1).
class ApproxFunction {
 public:
  enum class Kind { Power, Table };

  static ApproxFunction power(double tau);
  static ApproxFunction table(std::vector<std::pair<double, double>> steps);

  Kind kind() const { return kind_; }
  double tau() const { return tau_; }
  double operator()(double q) const;
  // Non-increasing with values in (0, 1] on [1, q_max]; InvalidArgument otherwise.
  void validate(double q_max) const;
  // sum_{q <= q_max} (2 psi(q))^n, the expected hit count of a uniform point.
  double first_moment(std::int64_t q_max, int n) const;

 private:
  Kind kind_ = Kind::Power;
  double tau_ = 0;
  std::vector<std::pair<double, double>> steps_;
};

// Block s holds e^(s-1) <= q < e^s.
struct ApproxBlock {
  int s = 0;
  std::int64_t q_lo = 0;
  std::int64_t q_hi = 0;
  std::int64_t best_q = 0;
  double best_m = 0.5;
};

// m_q = sup-norm distance of q F(x) - theta to Z^n for 1 <= q <= q_max;
// m[q - 1] holds m_q and err[q - 1] its rounding bound (0 on the exact path).
struct ApproxTrace {
  std::vector<double> x;
  std::int64_t q_max = 0;
  bool exact = false;
  std::vector<double> m;
  std::vector<double> err;
  std::vector<ApproxBlock> blocks;

  double m_at(std::int64_t q) const { return m[static_cast<std::size_t>(q - 1)]; }
};

inline constexpr std::int64_t kTraceBudget = 1'000'000;

// Floating path: F(x) in long double, rounding bound q (|F_i| + 1) 1e-16.
ApproxTrace trace(const ManifoldMap& map, const std::vector<double>& theta, std::span<const double> x,
                  std::int64_t q_max, std::int64_t budget = kTraceBudget);
// Exact path for rational x and theta.
ApproxTrace trace_exact(const ManifoldMap& map, const std::vector<Rational>& theta, std::span<const Rational> x,
                        std::int64_t q_max, std::int64_t budget = kTraceBudget);

struct HitCount {
  std::int64_t count = 0;      // m_q <= psi(q) beyond the rounding bound
  std::int64_t ambiguous = 0;  // |m_q - psi(q)| within the rounding bound
};
HitCount is_approximable_count(const ApproxTrace& tr, const ApproxFunction& psi);
// Same, restricted to lo <= q <= hi.
HitCount hits_in_range(const ApproxTrace& tr, const ApproxFunction& psi, std::int64_t lo, std::int64_t hi);

// Last block lying entirely in [1, q_max]: [ceil(e^(s-1)), ceil(e^s) - 1] with
// s = floor(log q_max).
std::pair<std::int64_t, std::int64_t> last_full_block(std::int64_t q_max);

struct SampleRecord {
  std::int64_t id = 0;
  std::vector<double> x;
  std::int64_t hits_total = 0;
  std::int64_t hits_ambiguous = 0;
  bool last_block_hit = false;
  bool tail_hit = false;  // a hit with q > tail_threshold
  std::int64_t last_hit_q = 0;  // 0 when no hit
};

struct KhintchineSummary {
  std::vector<SampleRecord> samples;
  double last_block_fraction = 0;
  double tail_fraction = 0;
  // For s = 1, 2, ...: fraction of samples with a hit at some q >= e^s.
  std::vector<double> beyond_fraction;
  double mean_hits = 0;
  double first_moment = 0;  // analytic expected hit count
};

struct KhintchineOptions {
  std::int64_t tail_threshold = 1000;
  int workers = 1;
  std::int64_t budget = kTraceBudget;
};

// Samples x uniformly from the working domain; sample i draws from its own
// generator keyed by (seed, i).
KhintchineSummary mc_khintchine(const ManifoldMap& map, const std::vector<double>& theta, const ApproxFunction& psi,
                                std::int64_t n_samples, std::int64_t q_max, std::uint64_t seed,
                                const KhintchineOptions& opt = {});

std::vector<double> sample_point(const ManifoldMap& map, std::uint64_t seed, std::int64_t index);

struct ExponentEstimate {
  double value = 0;  // +inf when some m_q in the window vanishes
  bool rational_flag = false;
  std::int64_t argmax_q = 0;
};
// max over window_lo <= q <= q_max of -log m_q / log q; window_lo defaults to
// ceil(sqrt(q_max)). On the floating path m_q at or below its rounding bound
// counts as zero.
ExponentEstimate exponent_estimate(const ApproxTrace& tr, std::int64_t window_lo = 0);
ExponentEstimate exponent_estimate(const ManifoldMap& map, const std::vector<double>& theta,
                                   std::span<const double> x, std::int64_t q_max, std::int64_t window_lo = 0);

struct SpectrumSummary {
  std::vector<double> estimates;  // per sample
  double share_inside = 0;        // estimates in [lo, hi]
  double lo = 0, hi = 0;
  std::vector<double> edges;               // histogram bin edges
  std::vector<std::int64_t> histogram;     // counts per bin, last bin open
};
SpectrumSummary exponent_spectrum(const ManifoldMap& map, const std::vector<double>& theta, std::int64_t n_samples,
                                  std::int64_t q_max, std::uint64_t seed, double lo, double hi, int workers = 1,
                                  std::int64_t window_lo = 0);

// [1/n, 1/n + (n+1)/(n(2n-1)(n^2+n+1))].
std::pair<double, double> spectrum_interval(int n);

}  // namespace nearrat
