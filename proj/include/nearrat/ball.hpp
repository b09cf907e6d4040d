#pragma once

#include <span>
#include <vector>

namespace nearrat {

// Closed sup-norm ball in R^k. A zero radius is allowed and denotes a single
// point (degenerate ball).
struct Ball {
  std::vector<double> center;
  double radius = 0.0;

  Ball() = default;
  Ball(std::vector<double> c, double r);

  static Ball interval(double lo, double hi);

  int dim() const { return static_cast<int>(center.size()); }
  double lo(int i) const { return center[i] - radius; }
  double hi(int i) const { return center[i] + radius; }
  double volume() const;
  double side() const { return 2.0 * radius; }

  bool contains(std::span<const double> x, double tol = 0.0) const;
  bool contains(const Ball& other) const;
  // Componentwise clamp of x onto the ball.
  std::vector<double> clamp(std::span<const double> x) const;
};

// Unit sup-norm ball volume, 2^d.
double sup_ball_volume(int d);

}  // namespace nearrat
