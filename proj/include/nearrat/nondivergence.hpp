#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nearrat/ball.hpp"
#include "nearrat/manifold.hpp"
#include "nearrat/polynomial.hpp"
#include "nearrat/sampling.hpp"

namespace nearrat {

// Parameters (delta, K, T_1..T_n) of the set of x admitting a in Z^n \ {0},
// a_0 in Z with |a_0 + F(x).a| < delta, |grad F(x) a| < K (sup norm) and
// |a_i| < T_i, where F(x) = (x, f(x)).
struct SBoxParams {
  double delta = 1.0;
  double K = 1.0;
  std::vector<double> T;

  // 0 < delta <= 1, T_i >= 1, K > 0 and delta^n < K prod(T) / max(T).
  bool admissible() const;
  // K prod(T) / max(T) times delta, the base of the alpha-power bound.
  double volume_term() const;
};

struct SWitness {
  std::int64_t a0 = 0;
  std::vector<std::int64_t> a;
};

struct WitnessOptions {
  std::int64_t budget = 10'000'000;  // candidate a vectors examined per point
};

// A witness minimal in sup norm, ties broken lexicographically; nullopt when
// the T-box holds none.
std::optional<SWitness> witness_S(const ManifoldMap& map, std::span<const double> x, const SBoxParams& params,
                                  const WitnessOptions& opt = {});

// The three forms |a0 + F(x).a|, |grad F(x) a|, |a| for a candidate a, with
// a0 the nearest integer to -F(x).a.
struct FormValues {
  std::int64_t a0 = 0;
  double value = 0;
  double gradient = 0;
  double sup_a = 0;
};
FormValues form_values(const ManifoldMap& map, std::span<const double> x, std::span<const std::int64_t> a);

struct MeasureSReport {
  MeasureEstimate estimate;
  bool admissible = true;
  double alpha = 0;
  // Right-hand sides before the implicit constants: the first and second
  // terms of the sharp bound and the alpha-power bound.
  double rhs_sharp_main = 0;
  double rhs_sharp_tail = 0;
  double rhs_km = 0;
};

MeasureSReport measure_S(const ManifoldMap& map, const Ball& B, const SBoxParams& params, const Sampler& sampler,
                         int workers = 1, const WitnessOptions& opt = {}, int l = 0);

// Set of x in I with dist(F(x), Z) < delta and |F'(x)| > 1/(Theta |I|),
// measured on a cell-center grid of grid_n points.
struct S1Report {
  MeasureEstimate estimate;
  double bound = 0;  // 8 k Theta delta |I|
};
S1Report measure_S1_1d(const Polynomial& F, int k, double delta, double Theta, const Ball& I, std::int64_t grid_n,
                       int workers = 1);

// |a0 + F(x).a| < delta and |grad F(x) a| >= G for the nearest-integer a0.
bool witness_Sdd(const ManifoldMap& map, std::span<const double> x, double delta, std::span<const std::int64_t> a,
                 double G);
MeasureEstimate measure_Sdd(const ManifoldMap& map, const Ball& B, double delta, std::span<const std::int64_t> a,
                            double G, const Sampler& sampler, int workers = 1);

// Parameter families: delta = c e^-t, K = c (eps^m e^t)^(1/d), T_i = c / eps
// for the lower-bound argument, and delta = c e^-t, K = c eps^(-1/2) e^(-t/2),
// T_i = c / eps for the special-set inclusion.
SBoxParams lower_bound_family(int n, int m, int d, double eps, double t, double c);
SBoxParams inclusion_family(int n, double eps, double t, double c);

}  // namespace nearrat
