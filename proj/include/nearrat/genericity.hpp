#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nearrat/ball.hpp"
#include "nearrat/counting.hpp"
#include "nearrat/manifold.hpp"
#include "nearrat/matrix.hpp"
#include "nearrat/minima.hpp"

namespace nearrat {

// d_eps b_t g_{eps,t} u1(x), columns spanning the lattice.
Matrix<double> raw_special_basis(const ManifoldMap& map, std::span<const double> x, double eps, double t);

struct GenericityVerdict {
  std::vector<double> x;
  double delta_last = 0;
  double threshold = 0;  // phi e^h
  bool special = false;  // delta_last > threshold
};

GenericityVerdict classify(const ManifoldMap& map, std::span<const double> x, double eps, double t,
                           const MinimaOptions& opt = {});

// Thickening radius eps^(1/2) e^(-t/2).
double special_radius(double eps, double t);

// Raw special points found on a cell-center grid of B, with the thickened set
// taken as the union of open sup-norm balls of special_radius around them.
class SpecialCover {
 public:
  SpecialCover(Ball region, int per_axis, double radius, std::vector<std::uint8_t> special);

  const Ball& region() const { return region_; }
  int per_axis() const { return per_axis_; }
  double pitch() const { return pitch_; }
  double radius() const { return radius_; }
  std::int64_t grid_points() const { return static_cast<std::int64_t>(special_.size()); }
  std::int64_t special_count() const { return special_count_; }

  std::vector<std::vector<double>> centers() const;
  std::vector<Ball> balls() const;
  // Whether x is within distance < radius of a special grid point.
  bool covers(std::span<const double> x) const;
  // Grid estimate of the thickened set inside the region: cells whose center
  // is covered, times the cell volume.
  double measure() const;

 private:
  std::vector<double> cell_center(std::int64_t index) const;

  Ball region_;
  int per_axis_;
  double pitch_;
  double radius_;
  int reach_;
  std::vector<std::uint8_t> special_;
  std::int64_t special_count_ = 0;
};

// Cells per axis giving pitch radius / 2.
int cover_grid_per_axis(const Ball& B, double eps, double t);

// PreconditionError when the pitch exceeds the thickening radius.
SpecialCover special_cover(const ManifoldMap& map, const Ball& B, double eps, double t, int per_axis, int workers = 1,
                           const MinimaOptions& opt = {});

// 1, 2, 4, ..., 2^10.
std::vector<double> dyadic_c_grid(int max_exponent = 10);

// Least c in c_grid for which the inclusion-family box holds a witness at x.
std::optional<double> check_inclusion(const ManifoldMap& map, std::span<const double> x, double eps, double t,
                                      const std::vector<double>& c_grid);

struct InclusionSummary {
  std::int64_t special_points = 0;
  std::int64_t included = 0;
  std::vector<double> c_values;  // one per included point, in grid order
  double c_median = 0;
  double c_p95 = 0;
  double c_max = 0;
};
InclusionSummary summarize_inclusion(const ManifoldMap& map, const SpecialCover& cover, double eps, double t,
                                     const std::vector<double>& c_grid, int workers = 1);

struct GenericCount {
  std::int64_t total = 0;    // count_N_total over B
  std::int64_t generic = 0;  // pairs whose projection witness lies outside the cover
  double prediction = 0;     // eps^m e^((d+1)t) vol(B)
  double ratio = 0;          // generic / prediction
  // Largest number of generic pairs over tiles of side 2 (eps e^-t)^(1/2),
  // and eps^n e^t (eps e^-t)^(-d/2).
  std::int64_t tile_max = 0;
  double tile_bound = 0;
  std::int64_t tiles = 0;
};
GenericCount count_generic(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps,
                           double t, const SpecialCover& cover, const CountOptions& opt = {});

struct LowerBoundCell {
  std::vector<double> x;
  double delta1 = 0;       // delta_1(a^-1 u1(x) Z^(n+1))
  double delta1_dual = 0;  // delta_1((a^-1)* u1(x)* Z^(n+1))
  bool in_G = false;       // delta1 >= v
  double rho = 0;          // (1/(2 v^(n+1))) (eps^m e^((d+1)t))^(-1/d)
};
LowerBoundCell classify_G(const ManifoldMap& map, std::span<const double> x, double v, double t, double eps,
                          const MinimaOptions& opt = {});

// C0 (eps^m e^((d+1)t))^(-1/d).
double lower_bound_rho(double eps, double t, int m, int d, double C0);

struct CoverFraction {
  double fraction = 0;
  std::int64_t centers = 0;  // (q, p_d) pairs of the N-set
  bool exact = false;        // interval union (d = 1) or grid estimate
};
// Part of B covered by open rho-balls around the points (p_d + theta_d)/q of
// the N-set. Exact for d = 1; a cell-center grid of grid_n points otherwise.
CoverFraction delta_cover_fraction(const ManifoldMap& map, const std::vector<double>& theta, const Ball& B, double eps,
                                   double t, double rho, std::int64_t grid_n = 1'000'000,
                                   const CountOptions& opt = {});

}  // namespace nearrat
