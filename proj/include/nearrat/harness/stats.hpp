#pragma once

#include <vector>

namespace nearrat::harness {

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double slope_se = 0;
  // Two-sided Student-t interval for the slope; equal to the slope when
  // there are only two points.
  double slope_lo = 0;
  double slope_hi = 0;
  int points = 0;
};

// Least squares y = intercept + slope x; InvalidArgument with fewer than two
// distinct x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, double confidence = 0.95);

}  // namespace nearrat::harness
