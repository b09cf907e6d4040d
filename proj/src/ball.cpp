#include "nearrat/ball.hpp"

#include <algorithm>
#include <cmath>

#include "nearrat/errors.hpp"

namespace nearrat {

Ball::Ball(std::vector<double> c, double r) : center(std::move(c)), radius(r) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("ball radius must be finite and non-negative");
  if (center.empty()) throw InvalidArgument("ball center must have at least one coordinate");
}

Ball Ball::interval(double lo, double hi) {
  if (!(hi >= lo)) throw InvalidArgument("interval: hi < lo");
  return Ball({0.5 * (lo + hi)}, 0.5 * (hi - lo));
}

double Ball::volume() const { return std::pow(2.0 * radius, dim()); }

bool Ball::contains(std::span<const double> x, double tol) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (x[i] < lo(i) - tol || x[i] > hi(i) + tol) return false;
  return true;
}

bool Ball::contains(const Ball& other) const {
  if (other.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (other.lo(i) < lo(i) - 1e-15 || other.hi(i) > hi(i) + 1e-15) return false;
  return true;
}

std::vector<double> Ball::clamp(std::span<const double> x) const {
  std::vector<double> u(x.begin(), x.end());
  for (int i = 0; i < dim(); ++i) u[i] = std::clamp(u[i], lo(i), hi(i));
  return u;
}

double sup_ball_volume(int d) { return std::ldexp(1.0, d); }

}  // namespace nearrat
