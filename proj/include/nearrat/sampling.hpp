#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nearrat/ball.hpp"

namespace nearrat {

// Points of B visited by a measure estimator: cell centers of a uniform grid
// with `per_axis` cells per coordinate, or uniform Monte-Carlo samples.
struct Sampler {
  enum class Kind { Grid, MonteCarlo };
  Kind kind = Kind::Grid;
  std::int64_t n_pts = 10000;
  std::uint64_t seed = 0;

  static Sampler grid(std::int64_t n_pts) { return {Kind::Grid, n_pts, 0}; }
  static Sampler mc(std::int64_t n_pts, std::uint64_t seed) { return {Kind::MonteCarlo, n_pts, seed}; }
  std::string name() const { return kind == Kind::Grid ? "grid" : "mc"; }
};

// Samples are produced in fixed-size chunks; chunk c of a Monte-Carlo sampler
// draws from its own generator seeded by (seed, c), so a point depends only on
// its index and never on how chunks are spread over workers.
inline constexpr std::int64_t kSampleChunk = 4096;

inline std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t chunk, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

// Grid cells per axis for a requested total of n_pts points in dimension d.
int grid_per_axis(std::int64_t n_pts, int d);

// Fills `out` (size d) with point `index` of the sampler over B. For Monte
// Carlo, `rng` must be the generator of the chunk containing index, advanced
// in index order.
void grid_point(const Ball& B, int per_axis, std::int64_t index, std::vector<double>& out);

struct MeasureEstimate {
  double value = 0;       // estimated d-dimensional measure
  double half_width = 0;  // 95% CI (Monte Carlo) or boundary-cell bound (grid)
  std::int64_t samples = 0;
  std::int64_t hits = 0;
};

// Generic estimator: indicator(x) evaluated at every sample point of B.
// Grid: value = hits * cell volume, half_width = cells adjacent to a cell with
// a different verdict times the cell volume. Monte Carlo: value = hit fraction
// times vol(B) with a 1.96-sigma binomial half width.
template <class Indicator>
MeasureEstimate estimate_measure(const Ball& B, const Sampler& s, int workers, Indicator&& indicator);

}  // namespace nearrat

#include "nearrat/sampling_impl.hpp"
