#include "nearrat/khintchine.hpp"

#include <algorithm>
#include <cmath>

#include "nearrat/errors.hpp"
#include "nearrat/parallel.hpp"
#include "nearrat/sampling.hpp"

namespace nearrat {

namespace {

constexpr double kRoundingUnit = 1e-16;

void check_trace_inputs(const ManifoldMap& map, std::size_t theta_size, std::int64_t q_max, std::int64_t budget) {
  if (static_cast<int>(theta_size) != map.n()) throw InvalidArgument("theta must have n coordinates");
  if (q_max < 1) throw InvalidArgument("q_max must be at least 1");
  if (q_max > budget) throw BudgetExceeded("q_max exceeds the trace budget");
}

void fill_blocks(ApproxTrace& tr) {
  for (int s = 1;; ++s) {
    const auto lo = static_cast<std::int64_t>(std::ceil(std::exp(s - 1.0)));
    if (lo > tr.q_max) break;
    const auto hi = std::min<std::int64_t>(tr.q_max, static_cast<std::int64_t>(std::ceil(std::exp(s))) - 1);
    ApproxBlock b;
    b.s = s;
    b.q_lo = lo;
    b.q_hi = hi;
    b.best_q = lo;
    b.best_m = tr.m_at(lo);
    for (std::int64_t q = lo + 1; q <= hi; ++q)
      if (tr.m_at(q) < b.best_m) {
        b.best_m = tr.m_at(q);
        b.best_q = q;
      }
    tr.blocks.push_back(b);
  }
}

}  // namespace

ApproxFunction ApproxFunction::power(double tau) {
  if (!(tau > 0) || !std::isfinite(tau)) throw InvalidArgument("psi: tau must be positive");
  ApproxFunction f;
  f.kind_ = Kind::Power;
  f.tau_ = tau;
  return f;
}

ApproxFunction ApproxFunction::table(std::vector<std::pair<double, double>> steps) {
  if (steps.empty()) throw InvalidArgument("psi: empty table");
  for (std::size_t i = 1; i < steps.size(); ++i)
    if (!(steps[i].first > steps[i - 1].first)) throw InvalidArgument("psi: table abscissae must increase");
  ApproxFunction f;
  f.kind_ = Kind::Table;
  f.steps_ = std::move(steps);
  return f;
}

double ApproxFunction::operator()(double q) const {
  if (kind_ == Kind::Power) return std::pow(q, -tau_);
  auto it = std::upper_bound(steps_.begin(), steps_.end(), q,
                             [](double v, const std::pair<double, double>& s) { return v < s.first; });
  if (it == steps_.begin()) return steps_.front().second;
  return std::prev(it)->second;
}

void ApproxFunction::validate(double q_max) const {
  if (kind_ == Kind::Power) return;
  double prev = 2;
  for (const auto& [q, v] : steps_) {
    if (q > q_max) break;
    if (!(v > 0 && v <= 1)) throw InvalidArgument("psi: values must lie in (0, 1]");
    if (v > prev) throw InvalidArgument("psi: table must be non-increasing");
    prev = v;
  }
}

double ApproxFunction::first_moment(std::int64_t q_max, int n) const {
  double s = 0;
  for (std::int64_t q = 1; q <= q_max; ++q) s += std::pow(std::min(1.0, 2 * (*this)(static_cast<double>(q))), n);
  return s;
}

ApproxTrace trace(const ManifoldMap& map, const std::vector<double>& theta, std::span<const double> x,
                  std::int64_t q_max, std::int64_t budget) {
  check_trace_inputs(map, theta.size(), q_max, budget);
  if (!map.in_domain(x, 1e-9)) throw InvalidArgument("trace: point outside the working domain");
  const int d = map.d(), n = map.n();
  std::vector<long double> F(n), xl(x.begin(), x.end());
  for (int i = 0; i < d; ++i) F[i] = xl[i];
  for (int j = 0; j < map.m(); ++j) F[d + j] = map.component(j).eval_long(xl);
  std::vector<long double> th(n);
  double scale = 0;
  for (int i = 0; i < n; ++i) {
    th[i] = theta[i] - std::floor(theta[i]);
    scale = std::max(scale, static_cast<double>(std::fabs(F[i])) + 1.0);
  }
  ApproxTrace tr;
  tr.x.assign(x.begin(), x.end());
  tr.q_max = q_max;
  tr.m.resize(q_max);
  tr.err.resize(q_max);
  for (std::int64_t q = 1; q <= q_max; ++q) {
    const long double ql = static_cast<long double>(q);
    long double worst = 0;
    for (int i = 0; i < n; ++i) {
      const long double y = ql * F[i] - th[i];
      auto k = static_cast<std::int64_t>(y);
      if (static_cast<long double>(k) > y) --k;
      const long double r = y - static_cast<long double>(k);
      worst = std::max(worst, std::min(r, 1.0L - r));
    }
    tr.m[q - 1] = static_cast<double>(worst);
    tr.err[q - 1] = static_cast<double>(q) * scale * kRoundingUnit;
  }
  fill_blocks(tr);
  return tr;
}

ApproxTrace trace_exact(const ManifoldMap& map, const std::vector<Rational>& theta, std::span<const Rational> x,
                        std::int64_t q_max, std::int64_t budget) {
  check_trace_inputs(map, theta.size(), q_max, budget);
  const int n = map.n();
  std::vector<double> xd;
  for (const auto& v : x) xd.push_back(v.get_d());
  if (!map.in_domain(xd, 1e-9)) throw InvalidArgument("trace: point outside the working domain");
  std::vector<Rational> F(x.begin(), x.end());
  const auto f = map.eval_f(x);
  F.insert(F.end(), f.begin(), f.end());
  // q F_i - theta_i = (q a e - c b) / (b e) with F_i = a/b, theta_i = c/e
  std::vector<mpz_class> den(n), step(n), res(n);
  for (int i = 0; i < n; ++i) {
    den[i] = F[i].get_den() * theta[i].get_den();
    step[i] = F[i].get_num() * theta[i].get_den();
    res[i] = -theta[i].get_num() * F[i].get_den();
    step[i] %= den[i];
    if (step[i] < 0) step[i] += den[i];
    res[i] %= den[i];
    if (res[i] < 0) res[i] += den[i];
  }
  ApproxTrace tr;
  tr.x = xd;
  tr.q_max = q_max;
  tr.exact = true;
  tr.m.resize(q_max);
  tr.err.assign(q_max, 0.0);
  mpz_class near;
  for (std::int64_t q = 1; q <= q_max; ++q) {
    Rational worst(0);
    for (int i = 0; i < n; ++i) {
      res[i] += step[i];
      if (res[i] >= den[i]) res[i] -= den[i];
      near = den[i] - res[i];
      const Rational dist(std::min(res[i], near), den[i]);
      if (dist > worst) worst = dist;
    }
    worst.canonicalize();
    tr.m[q - 1] = worst.get_d();
  }
  fill_blocks(tr);
  return tr;
}

HitCount hits_in_range(const ApproxTrace& tr, const ApproxFunction& psi, std::int64_t lo, std::int64_t hi) {
  HitCount h;
  lo = std::max<std::int64_t>(lo, 1);
  hi = std::min(hi, tr.q_max);
  for (std::int64_t q = lo; q <= hi; ++q) {
    const double p = psi(static_cast<double>(q));
    const double m = tr.m_at(q), e = tr.err[q - 1];
    if (p >= 0.5 || m <= p - e)
      ++h.count;
    else if (m <= p + e)
      ++h.ambiguous;
  }
  return h;
}

HitCount is_approximable_count(const ApproxTrace& tr, const ApproxFunction& psi) {
  return hits_in_range(tr, psi, 1, tr.q_max);
}

std::pair<std::int64_t, std::int64_t> last_full_block(std::int64_t q_max) {
  if (q_max < 2) throw InvalidArgument("last_full_block: q_max must be at least 2");
  int s = static_cast<int>(std::floor(std::log(static_cast<double>(q_max))));
  if (static_cast<std::int64_t>(std::ceil(std::exp(s))) - 1 > q_max) --s;
  const auto lo = static_cast<std::int64_t>(std::ceil(std::exp(s - 1.0)));
  const auto hi = static_cast<std::int64_t>(std::ceil(std::exp(s))) - 1;
  return {lo, hi};
}

std::vector<double> sample_point(const ManifoldMap& map, std::uint64_t seed, std::int64_t index) {
  auto rng = chunk_rng(seed, static_cast<std::uint64_t>(index), 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Ball& U = map.domain();
  std::vector<double> x(map.d());
  for (int i = 0; i < map.d(); ++i) x[i] = U.lo(i) + U.side() * u(rng);
  return x;
}

KhintchineSummary mc_khintchine(const ManifoldMap& map, const std::vector<double>& theta, const ApproxFunction& psi,
                                std::int64_t n_samples, std::int64_t q_max, std::uint64_t seed,
                                const KhintchineOptions& opt) {
  if (n_samples < 1) throw InvalidArgument("mc_khintchine: need at least one sample");
  psi.validate(static_cast<double>(q_max));
  const auto [blo, bhi] = last_full_block(q_max);
  const int smax = static_cast<int>(std::floor(std::log(static_cast<double>(q_max))));
  KhintchineSummary sum;
  sum.samples.resize(n_samples);
  std::vector<std::int64_t> last_hit(n_samples, 0);
  std::vector<double> psi_q(static_cast<std::size_t>(q_max) + 1);
  for (std::int64_t q = 1; q <= q_max; ++q) psi_q[q] = psi(static_cast<double>(q));
  parallel_for(n_samples, opt.workers, [&](std::int64_t i) {
    auto& r = sum.samples[i];
    r.id = i;
    r.x = sample_point(map, seed, i);
    const auto tr = trace(map, theta, r.x, q_max, opt.budget);
    for (std::int64_t q = 1; q <= q_max; ++q) {
      const double p = psi_q[q], m = tr.m_at(q), e = tr.err[q - 1];
      if (p >= 0.5 || m <= p - e) {
        ++r.hits_total;
        r.last_block_hit |= q >= blo && q <= bhi;
        r.tail_hit |= q > opt.tail_threshold;
        r.last_hit_q = q;
      } else if (m <= p + e) {
        ++r.hits_ambiguous;
      }
    }
    last_hit[i] = r.last_hit_q;
  });
  double hits = 0;
  std::int64_t lb = 0, tail = 0;
  for (const auto& r : sum.samples) {
    hits += static_cast<double>(r.hits_total);
    lb += r.last_block_hit;
    tail += r.tail_hit;
  }
  const double ns = static_cast<double>(n_samples);
  sum.last_block_fraction = lb / ns;
  sum.tail_fraction = tail / ns;
  sum.mean_hits = hits / ns;
  for (int s = 1; s <= smax; ++s) {
    const auto q0 = static_cast<std::int64_t>(std::ceil(std::exp(s)));
    std::int64_t c = 0;
    for (auto q : last_hit) c += q >= q0;
    sum.beyond_fraction.push_back(c / ns);
  }
  sum.first_moment = psi.first_moment(q_max, map.n());
  return sum;
}

ExponentEstimate exponent_estimate(const ApproxTrace& tr, std::int64_t window_lo) {
  if (window_lo <= 0) window_lo = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(tr.q_max))));
  window_lo = std::max<std::int64_t>(window_lo, 2);
  if (window_lo > tr.q_max) throw InvalidArgument("exponent window is empty");
  ExponentEstimate est;
  est.value = -std::numeric_limits<double>::infinity();
  for (std::int64_t q = window_lo; q <= tr.q_max; ++q) {
    const double m = tr.m_at(q);
    if (m <= tr.err[q - 1]) {
      est.value = std::numeric_limits<double>::infinity();
      est.rational_flag = true;
      est.argmax_q = q;
      return est;
    }
    const double v = -std::log(m) / std::log(static_cast<double>(q));
    if (v > est.value) {
      est.value = v;
      est.argmax_q = q;
    }
  }
  return est;
}

ExponentEstimate exponent_estimate(const ManifoldMap& map, const std::vector<double>& theta,
                                   std::span<const double> x, std::int64_t q_max, std::int64_t window_lo) {
  return exponent_estimate(trace(map, theta, x, q_max), window_lo);
}

SpectrumSummary exponent_spectrum(const ManifoldMap& map, const std::vector<double>& theta, std::int64_t n_samples,
                                  std::int64_t q_max, std::uint64_t seed, double lo, double hi, int workers,
                                  std::int64_t window_lo) {
  if (n_samples < 1) throw InvalidArgument("exponent_spectrum: need at least one sample");
  SpectrumSummary s;
  s.lo = lo;
  s.hi = hi;
  s.estimates.resize(n_samples);
  parallel_for(n_samples, workers, [&](std::int64_t i) {
    const auto x = sample_point(map, seed, i);
    s.estimates[i] = exponent_estimate(map, theta, x, q_max, window_lo).value;
  });
  std::int64_t inside = 0;
  for (double e : s.estimates) inside += e >= lo && e <= hi;
  s.share_inside = inside / static_cast<double>(n_samples);
  for (int k = 0; k <= 30; ++k) s.edges.push_back(0.05 * k);
  s.histogram.assign(s.edges.size(), 0);
  for (double e : s.estimates) {
    const auto it = std::upper_bound(s.edges.begin(), s.edges.end(), e);
    const auto bin = it == s.edges.begin() ? 0 : static_cast<std::size_t>(it - s.edges.begin()) - 1;
    ++s.histogram[bin];
  }
  return s;
}

std::pair<double, double> spectrum_interval(int n) {
  if (n < 2) throw InvalidArgument("spectrum_interval: n must be at least 2");
  const double lo = 1.0 / n;
  return {lo, lo + (n + 1.0) / (n * (2.0 * n - 1) * (n * n + n + 1.0))};
}

}  // namespace nearrat
