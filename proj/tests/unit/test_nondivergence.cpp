#include <doctest.h>

#include <cmath>
#include <random>

#include "nearrat/errors.hpp"
#include "nearrat/nondivergence.hpp"

using namespace nearrat;

namespace {

Polynomial univariate(std::initializer_list<std::pair<int, double>> terms) {
  Polynomial p(1);
  for (auto [e, c] : terms) p.add_term({e}, rational_from_double(c));
  return p;
}

// Full scan of the T-box, no pruning: minimal sup norm, then lexicographic.
std::optional<std::vector<std::int64_t>> brute_witness(const ManifoldMap& map, const std::vector<double>& x,
                                                       const SBoxParams& p) {
  const int n = map.n();
  std::vector<std::int64_t> amax(n), a(n);
  for (int i = 0; i < n; ++i) a[i] = -(amax[i] = static_cast<std::int64_t>(std::ceil(p.T[i])) - 1);
  std::optional<std::vector<std::int64_t>> best;
  std::int64_t best_s = 0;
  for (;;) {
    bool nz = false;
    std::int64_t s = 0;
    for (auto v : a) {
      nz |= v != 0;
      s = std::max<std::int64_t>(s, std::llabs(v));
    }
    if (nz) {
      const auto fv = form_values(map, x, a);
      if (fv.value < p.delta && fv.gradient < p.K && (!best || s < best_s || (s == best_s && a < *best))) {
        best = a;
        best_s = s;
      }
    }
    int i = n - 1;
    while (i >= 0 && a[i] == amax[i]) {
      a[i] = -amax[i];
      --i;
    }
    if (i < 0) break;
    ++a[i];
  }
  return best;
}

}  // namespace

TEST_CASE("witness at the origin of the parabola") {
  const auto v2 = veronese(2);
  const std::vector<double> x{0.0};
  SBoxParams p{0.01, 0.5, {2, 2}};
  const auto w = witness_S(v2, x, p);
  REQUIRE(w.has_value());
  CHECK(w->a[0] == 0);
  CHECK(std::llabs(w->a[1]) == 1);
  CHECK(w->a0 == 0);
}

TEST_CASE("constant badly placed graph has no small witness") {
  Polynomial c = Polynomial::constant(1, rational_from_double(std::sqrt(2.0)));
  const auto map = polynomial_monge(1, 2, {c}, Ball({0.5}, 0.5));
  const std::vector<double> x{0.3};
  CHECK_FALSE(witness_S(map, x, SBoxParams{0.05, 10, {2, 2}}).has_value());
  CHECK(witness_S(map, x, SBoxParams{0.2, 10, {2, 2}}).has_value());
}

TEST_CASE("admissibility flag does not stop the search") {
  const auto v2 = veronese(2);
  SBoxParams p{1.0, 0.001, {1, 1}};
  CHECK_FALSE(p.admissible());
  const auto rep = measure_S(v2, Ball::interval(0.2, 0.8), p, Sampler::grid(200));
  CHECK_FALSE(rep.admissible);
  CHECK(rep.estimate.value == 0.0);
  CHECK(SBoxParams{0.5, 1.0, {2, 2}}.admissible());
}

TEST_CASE("witness search agrees with an unpruned scan") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0, 1);
  const ManifoldMap maps[] = {veronese(2), veronese(3), paraboloid()};
  int found = 0;
  for (const auto& map : maps) {
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> x(map.d());
      for (int i = 0; i < map.d(); ++i) x[i] = map.domain().lo(i) + map.domain().side() * U(rng);
      SBoxParams p;
      p.delta = 0.02 + 0.2 * U(rng);
      p.K = 0.5 + 4 * U(rng);
      for (int i = 0; i < map.n(); ++i) p.T.push_back(1.0 + 4 * U(rng));
      const auto w = witness_S(map, x, p);
      const auto b = brute_witness(map, x, p);
      REQUIRE(w.has_value() == b.has_value());
      if (w) {
        ++found;
        CHECK(w->a == *b);
        const auto fv = form_values(map, x, w->a);
        CHECK(fv.a0 == w->a0);
      }
    }
  }
  CHECK(found >= 20);
}

TEST_CASE("full-measure regime") {
  const auto v2 = veronese(2);
  const Ball B = Ball::interval(0.1, 0.9);
  const auto rep = measure_S(v2, B, SBoxParams{1.0, 3.0, {2, 2}}, Sampler::grid(1000));
  CHECK(rep.estimate.hits == rep.estimate.samples);
  CHECK(rep.estimate.value == doctest::Approx(B.volume()));
}

TEST_CASE("estimates are monotone along nested parameter chains") {
  const auto v2 = veronese(2);
  const Ball B = Ball::interval(0.0, 1.0);
  const auto grid = Sampler::grid(2000);
  std::int64_t prev = -1;
  for (double delta : {0.0005, 0.001, 0.002, 0.004, 0.008, 0.016, 0.032}) {
    const auto r = measure_S(v2, B, SBoxParams{delta, 4.0, {6, 6}}, grid);
    CHECK(r.estimate.hits >= prev);
    prev = r.estimate.hits;
  }
  prev = -1;
  for (double K : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const auto r = measure_S(v2, B, SBoxParams{0.01, K, {6, 6}}, grid);
    CHECK(r.estimate.hits >= prev);
    prev = r.estimate.hits;
  }
  prev = -1;
  for (double T : {1.5, 2.5, 4.0, 6.0, 9.0}) {
    const auto r = measure_S(v2, B, SBoxParams{0.01, 4.0, {T, T}}, grid);
    CHECK(r.estimate.hits >= prev);
    prev = r.estimate.hits;
  }
  // delta -> 0 drains the set
  const auto tiny = measure_S(v2, B, SBoxParams{1e-9, 4.0, {6, 6}}, grid);
  CHECK(tiny.estimate.hits <= 2);
}

TEST_CASE("Monte Carlo estimates are reproducible and worker invariant") {
  const auto par = paraboloid();
  const Ball B({0.3, 0.2}, 0.25);
  SBoxParams p{0.004, 1.0, {3, 3, 3}};
  const auto a = measure_S(par, B, p, Sampler::mc(9000, 77), 1);
  const auto b = measure_S(par, B, p, Sampler::mc(9000, 77), 4);
  CHECK(a.estimate.hits == b.estimate.hits);
  CHECK(a.estimate.value == b.estimate.value);
  CHECK(a.estimate.half_width == b.estimate.half_width);
  const auto c = measure_S(par, B, p, Sampler::mc(9000, 78), 1);
  CHECK(c.estimate.hits != a.estimate.hits);
  CHECK(a.estimate.value <= B.volume() + a.estimate.half_width);
}

TEST_CASE("right-hand sides of the measure bounds") {
  const auto v2 = veronese(2);
  const Ball B = Ball::interval(0.25, 0.75);
  SBoxParams p{0.1, 2.0, {3.0, 5.0}};
  const auto r = measure_S(v2, B, p, Sampler::grid(100));
  const double al = 1.0 / 9.0;  // d = 1, n = 2, l = 2
  CHECK(r.alpha == doctest::Approx(al));
  CHECK(r.rhs_sharp_main == doctest::Approx(0.1 * 2.0 * 5.0 * 0.5));
  CHECK(r.rhs_sharp_tail == doctest::Approx(std::pow(0.1 * 2.0 * 3.0, al)));
  CHECK(r.rhs_km == doctest::Approx(std::pow(0.1 * 2.0 * 3.0, al) * 0.5));
}

TEST_CASE("ball outside the domain is rejected") {
  CHECK_THROWS_AS(measure_S(veronese(2), Ball::interval(0.5, 1.5), SBoxParams{0.1, 1, {2, 2}}, Sampler::grid(10)),
                  PreconditionError);
}

TEST_CASE("search budget") {
  WitnessOptions opt;
  opt.budget = 1000;
  const std::vector<double> x{0.3};
  CHECK_THROWS_AS(witness_S(veronese(3), x, SBoxParams{1e-9, 1e6, {100, 100, 100}}, opt), BudgetExceeded);
}

TEST_CASE("one-dimensional set for 10 x^2") {
  const auto F = univariate({{2, 10.0}});
  const Ball I = Ball::interval(0, 1);
  const auto rep = measure_S1_1d(F, 2, 0.01, 1.0, I, 1'000'000);
  CHECK(rep.bound == doctest::Approx(0.16));
  CHECK(rep.estimate.value <= 0.16);
  // exact measure: |20x| > 1 and 10x^2 within 0.01 of an integer j
  double exact = 0;
  for (int j = 0; j <= 10; ++j) {
    const double lo = std::max(0.05, std::sqrt(std::max(0.0, (j - 0.01) / 10.0)));
    const double hi = std::min(1.0, std::sqrt((j + 0.01) / 10.0));
    if (hi > lo) exact += hi - lo;
  }
  CHECK(std::fabs(rep.estimate.value - exact) <= rep.estimate.half_width + 1e-6);
}

TEST_CASE("one-dimensional bound over a battery of instances") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Polynomial F(1);
    int k = 0;
    switch (trial % 3) {
      case 0:
        F = univariate({{2, 1 + 30 * U(rng)}});
        k = 2;
        break;
      case 1:
        F = univariate({{3, 1 + 20 * U(rng)}, {1, 10 * U(rng) - 5}});
        k = 3;
        break;
      default:
        F = univariate({{4, 2 + 10 * U(rng)}, {2, 3 * U(rng)}, {1, U(rng)}});
        k = 4;
        break;
    }
    const double delta = 0.002 + 0.05 * U(rng);
    const double Theta = 0.5 + 3 * U(rng);
    const double a = 0.05 + 0.5 * U(rng);
    const Ball I = Ball::interval(a, a + 0.1 + 0.9 * U(rng));
    const auto rep = measure_S1_1d(F, k, delta, Theta, I, 1'000'000, 2);
    CHECK(rep.estimate.value <= rep.bound + rep.estimate.half_width);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("one-dimensional trivial regimes") {
  const Ball I = Ball::interval(0, 1);
  const auto F = univariate({{3, 4.0}, {1, 1.0}});
  CHECK(measure_S1_1d(F, 3, 0.6, 1.0, I, 10000).estimate.value <= I.side());
  // slope 0.5 never exceeds 1/(Theta |I|) = 1
  const auto lin = univariate({{1, 0.5}});
  CHECK(measure_S1_1d(lin, 1, 0.4, 1.0, I, 10000).estimate.value == 0.0);
  const auto wiggle = univariate({{2, 1.0}, {1, -1.0}});
  CHECK_THROWS_AS(measure_S1_1d(wiggle, 1, 0.1, 1.0, I, 1000), PreconditionError);
  CHECK_THROWS_AS(measure_S1_1d(F, 3, 0.1, 0.4, I, 1000), InvalidArgument);
}

TEST_CASE("single-form set") {
  const auto v2 = veronese(2);
  const std::vector<double> x{0.0};
  const std::int64_t flat[] = {0, 1};
  CHECK_FALSE(witness_Sdd(v2, x, 0.3, flat, 0.1));  // gradient 2x = 0
  const std::vector<double> y{0.37};
  const std::int64_t a[] = {1, 1};
  CHECK(witness_Sdd(v2, y, 0.5, a, 1.0));
  const std::int64_t zero[] = {0, 0};
  CHECK_THROWS_AS(witness_Sdd(v2, y, 0.5, zero, 1.0), InvalidArgument);
}

TEST_CASE("single-form measure scales like delta") {
  // x + x^2 on [0,1] crosses the integers 0, 1, 2 with slope 1 + 2x >= 1.
  const auto v2 = veronese(2);
  const Ball B = Ball::interval(0, 1);
  const std::int64_t a[] = {1, 1};
  auto root = [](double y) { return (-1 + std::sqrt(1 + 4 * y)) / 2; };
  std::vector<double> ratios;
  for (double delta : {0.1, 0.05, 0.02, 0.01, 0.005}) {
    const auto est = measure_Sdd(v2, B, delta, a, 1.0, Sampler::grid(400000));
    const double exact = root(delta) + (root(1 + delta) - root(1 - delta)) + (1 - root(2 - delta));
    CHECK(std::fabs(est.value - exact) <= est.half_width + 1e-6);
    ratios.push_back(est.value / (delta * B.volume()));
  }
  for (double r : ratios) CHECK(r == doctest::Approx(ratios.front()).epsilon(0.2));
}

TEST_CASE("parameter families") {
  const double eps = 0.25, t = 3.0, c = 2.0;
  const auto lb = lower_bound_family(3, 2, 1, eps, t, c);
  CHECK(lb.delta == doctest::Approx(c * std::exp(-t)));
  CHECK(lb.K == doctest::Approx(c * eps * eps * std::exp(t)));
  CHECK(lb.T == std::vector<double>(3, c / eps));
  const auto inc = inclusion_family(2, eps, t, c);
  CHECK(inc.K == doctest::Approx(c / std::sqrt(eps) * std::exp(-t / 2)));
  CHECK(inc.T.size() == 2);
}
