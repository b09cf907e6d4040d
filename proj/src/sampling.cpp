#include "nearrat/sampling.hpp"

#include <cmath>

#include "nearrat/errors.hpp"

namespace nearrat {

int grid_per_axis(std::int64_t n_pts, int d) {
  if (n_pts < 1 || d < 1) throw InvalidArgument("grid needs positive size and dimension");
  int per = static_cast<int>(std::llround(std::pow(static_cast<double>(n_pts), 1.0 / d)));
  return std::max(per, 1);
}

void grid_point(const Ball& B, int per_axis, std::int64_t index, std::vector<double>& out) {
  const int d = B.dim();
  out.resize(d);
  for (int a = 0; a < d; ++a) {
    const std::int64_t g = index % per_axis;
    index /= per_axis;
    out[a] = B.lo(a) + B.side() * (static_cast<double>(g) + 0.5) / per_axis;
  }
}

}  // namespace nearrat
