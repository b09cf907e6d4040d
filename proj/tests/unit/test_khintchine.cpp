#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "nearrat/errors.hpp"
#include "nearrat/khintchine.hpp"

using namespace nearrat;

namespace {

// m_q straight from the definition with rationals.
double oracle_m(const ManifoldMap& map, const std::vector<Rational>& theta, const std::vector<Rational>& x, long q) {
  std::vector<Rational> F = x;
  const auto f = map.eval_f(std::span<const Rational>(x));
  F.insert(F.end(), f.begin(), f.end());
  Rational worst(0);
  for (std::size_t i = 0; i < F.size(); ++i) {
    Rational y = Rational(q) * F[i] - theta[i];
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), y.get_num_mpz_t(), y.get_den_mpz_t());
    Rational r = y - Rational(fl);
    if (Rational(1) - r < r) r = Rational(1) - r;
    if (r > worst) worst = r;
  }
  return worst.get_d();
}

}  // namespace

TEST_CASE("half on the parabola") {
  const auto v2 = veronese(2);
  const std::vector<double> x{0.5}, theta{0, 0};
  const auto tr = trace(v2, theta, x, 16);
  CHECK(tr.m_at(2) == 0.5);
  CHECK(tr.m_at(4) == 0.0);
  const std::vector<Rational> xr{Rational(1, 2)}, thr{Rational(0), Rational(0)};
  const auto ex = trace_exact(v2, thr, xr, 16);
  CHECK(ex.exact);
  CHECK(ex.m_at(2) == 0.5);
  CHECK(ex.m_at(4) == 0.0);
}

TEST_CASE("rational points are hit at multiples of the denominator") {
  const auto v3 = veronese(3);
  const std::vector<Rational> xr{Rational(3, 7)}, thr(3, Rational(0));
  const auto ex = trace_exact(v3, thr, xr, 2000);
  for (long q = 343; q <= 2000; q += 343) CHECK(ex.m_at(q) == 0.0);
  const auto est = exponent_estimate(ex);
  CHECK(est.rational_flag);
  CHECK(est.value == std::numeric_limits<double>::infinity());
  const std::vector<double> x{3.0 / 7.0};
  const auto fl = exponent_estimate(v3, {0, 0, 0}, x, 2000);
  CHECK(fl.rational_flag);
}

TEST_CASE("exact and floating traces against the definition") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<long> num(1, 9999), tn(0, 999);
  const ManifoldMap maps[] = {veronese(2), veronese(3), paraboloid()};
  for (const auto& map : maps) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Rational> xr, thr;
      std::vector<double> x, theta;
      for (int i = 0; i < map.d(); ++i) {
        Rational v(num(rng), 10007);
        v.canonicalize();
        xr.push_back(v);
        x.push_back(v.get_d());
      }
      for (int i = 0; i < map.n(); ++i) {
        Rational v(tn(rng), 1000);
        v.canonicalize();
        thr.push_back(v);
        theta.push_back(v.get_d());
      }
      const auto ex = trace_exact(map, thr, xr, 400);
      const auto fl = trace(map, theta, x, 400);
      for (long q = 1; q <= 400; ++q) {
        const double o = oracle_m(map, thr, xr, q);
        CHECK(ex.m_at(q) == o);
        // x and theta went through doubles: allow their representation error
        CHECK(std::fabs(fl.m_at(q) - o) <= fl.err[q - 1] + 1e-13 * q);
      }
    }
  }
}

TEST_CASE("integer shifts of theta change nothing") {
  const auto v2 = veronese(2);
  const std::vector<double> x{0.61803398875};
  const std::vector<double> theta{0.25, 0.375};
  const std::vector<double> shifted{3.25, -4.625};
  const auto a = trace(v2, theta, x, 5000);
  const auto b = trace(v2, shifted, x, 5000);
  CHECK(a.m == b.m);
  const auto sa = mc_khintchine(v2, theta, ApproxFunction::power(0.45), 30, 3000, 7);
  const auto sb = mc_khintchine(v2, shifted, ApproxFunction::power(0.45), 30, 3000, 7);
  CHECK(sa.last_block_fraction == sb.last_block_fraction);
  CHECK(sa.mean_hits == sb.mean_hits);
}

TEST_CASE("hit counts") {
  const auto v2 = veronese(2);
  const std::vector<double> x{0.3141592653}, theta{0.1, 0.2};
  const auto tr = trace(v2, theta, x, 20000);
  CHECK(is_approximable_count(tr, ApproxFunction::table({{1, 0.5}})).count == 20000);
  std::int64_t prev = -1;
  for (double tau : {1.5, 1.0, 0.7, 0.5, 0.45, 0.3, 0.1}) {
    const auto h = is_approximable_count(tr, ApproxFunction::power(tau));
    CHECK(h.count >= prev);
    prev = h.count;
  }
  const std::vector<Rational> xr{Rational(2, 9)}, thr{Rational(0), Rational(0)};
  const auto ex = trace_exact(v2, thr, xr, 1000);
  std::int64_t zeros = 0;
  for (long q = 1; q <= 1000; ++q) zeros += ex.m_at(q) == 0.0;
  CHECK(zeros == 1000 / 81);
  CHECK(is_approximable_count(ex, ApproxFunction::table({{1, 1e-300}})).count == zeros);
}

TEST_CASE("approximation function tables") {
  const auto psi = ApproxFunction::table({{1, 0.4}, {10, 0.2}, {100, 0.05}});
  CHECK(psi(0.5) == 0.4);
  CHECK(psi(9.99) == 0.4);
  CHECK(psi(10) == 0.2);
  CHECK(psi(1e9) == 0.05);
  CHECK_NOTHROW(psi.validate(1e6));
  CHECK_THROWS_AS(ApproxFunction::table({{1, 0.1}, {5, 0.3}}).validate(10), InvalidArgument);
  CHECK_THROWS_AS(ApproxFunction::table({{1, 1.5}}).validate(10), InvalidArgument);
  CHECK_THROWS_AS(ApproxFunction::table({{5, 0.1}, {1, 0.05}}), InvalidArgument);
  CHECK_THROWS_AS(ApproxFunction::power(0), InvalidArgument);
  const auto p = ApproxFunction::power(0.7);
  double s = 0;
  for (int q = 1; q <= 100; ++q) s += std::min(1.0, std::pow(2 * std::pow(q, -0.7), 2));
  CHECK(p.first_moment(100, 2) == doctest::Approx(s));
}

TEST_CASE("blocks") {
  const auto v2 = veronese(2);
  const std::vector<double> x{0.123456789}, theta{0, 0};
  const auto tr = trace(v2, theta, x, 3000);
  REQUIRE(!tr.blocks.empty());
  CHECK(tr.blocks.front().q_lo == 1);
  for (const auto& b : tr.blocks) {
    CHECK(std::exp(b.s - 1.0) <= b.q_lo);
    if (b.q_hi < tr.q_max) CHECK(b.q_hi < std::exp(b.s));
    double best = 1;
    for (auto q = b.q_lo; q <= b.q_hi; ++q) best = std::min(best, tr.m_at(q));
    CHECK(b.best_m == best);
  }
  CHECK(tr.blocks.back().q_hi == 3000);
  const auto [lo, hi] = last_full_block(100000);
  CHECK(lo == 22027);
  CHECK(hi == 59874);
  CHECK_THROWS_AS(trace(v2, theta, x, 2'000'000), BudgetExceeded);
}

TEST_CASE("Monte Carlo summaries are deterministic and worker invariant") {
  const auto v2 = veronese(2);
  const std::vector<double> theta{0.3, 0.7};
  const auto psi = ApproxFunction::power(0.7);
  KhintchineOptions one, four;
  four.workers = 4;
  const auto a = mc_khintchine(v2, theta, psi, 64, 20000, 5, one);
  const auto b = mc_khintchine(v2, theta, psi, 64, 20000, 5, four);
  CHECK(a.tail_fraction == b.tail_fraction);
  CHECK(a.mean_hits == b.mean_hits);
  CHECK(a.beyond_fraction == b.beyond_fraction);
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].x == b.samples[i].x);
  // doubling the sample count keeps the first half and moves fractions by
  // sampling noise only
  const auto c = mc_khintchine(v2, theta, psi, 128, 20000, 5, one);
  CHECK(c.samples[10].x == a.samples[10].x);
  const double p = a.tail_fraction;
  CHECK(std::fabs(c.tail_fraction - p) <= 2 * std::sqrt(std::max(p * (1 - p), 0.25 / 64) / 64));
}

TEST_CASE("first-moment check in the convergent regime") {
  const auto v2 = veronese(2);
  const auto psi = ApproxFunction::power(0.7);
  const auto s = mc_khintchine(v2, {0, 0}, psi, 100, 50000, 11);
  CHECK(s.mean_hits <= 3 * s.first_moment);
  for (std::size_t i = 1; i < s.beyond_fraction.size(); ++i) CHECK(s.beyond_fraction[i] <= s.beyond_fraction[i - 1]);
}

TEST_CASE("hit counts grow in the divergent regime") {
  const auto v2 = veronese(2);
  const auto psi = ApproxFunction::power(0.45);
  const auto small = mc_khintchine(v2, {0, 0}, psi, 60, 2000, 13);
  const auto large = mc_khintchine(v2, {0, 0}, psi, 60, 50000, 13);
  CHECK(large.mean_hits > small.mean_hits);
  CHECK(large.last_block_fraction >= 0.9);
}

TEST_CASE("exponent estimates") {
  const auto v2 = veronese(2);
  const std::vector<double> x{0.5};
  const auto r = exponent_estimate(v2, {0, 0}, x, 10000);
  CHECK(r.rational_flag);
  const std::vector<double> y{0.7071067811865476};
  const auto tr = trace(v2, {0, 0}, y, 10000);
  const auto e = exponent_estimate(tr);
  CHECK_FALSE(e.rational_flag);
  CHECK(e.argmax_q >= 100);
  CHECK(e.value == doctest::Approx(-std::log(tr.m_at(e.argmax_q)) / std::log(double(e.argmax_q))));
  double best = 0;
  for (long q = 100; q <= 10000; ++q) best = std::max(best, -std::log(tr.m_at(q)) / std::log(double(q)));
  CHECK(e.value == best);
  CHECK_THROWS_AS(exponent_estimate(tr, 20000), InvalidArgument);
  const auto [lo, hi] = spectrum_interval(3);
  CHECK(lo == doctest::Approx(1.0 / 3));
  CHECK(hi == doctest::Approx(1.0 / 3 + 4.0 / (3 * 5 * 13)));
  const auto sp = exponent_spectrum(veronese(3), {0, 0, 0}, 20, 5000, 3, lo, hi);
  std::int64_t binned = 0;
  for (auto h : sp.histogram) binned += h;
  CHECK(binned == 20);
  CHECK(sp.share_inside >= 0.0);
}
