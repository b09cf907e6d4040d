#include "nearrat/harness/stats.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "nearrat/errors.hpp"

namespace nearrat::harness {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, double confidence) {
  if (x.size() != y.size()) throw InvalidArgument("fit_line: size mismatch");
  const int n = static_cast<int>(x.size());
  if (n < 2) throw InvalidArgument("fit_line: need two points");
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw InvalidArgument("fit_line: x values coincide");
  LineFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.slope_lo = f.slope_hi = f.slope;
  if (n > 2) {
    double rss = 0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / (n - 2) / sxx);
    boost::math::students_t dist(n - 2);
    const double q = boost::math::quantile(boost::math::complement(dist, (1 - confidence) / 2));
    f.slope_lo = f.slope - q * f.slope_se;
    f.slope_hi = f.slope + q * f.slope_se;
  }
  return f;
}

}  // namespace nearrat::harness
