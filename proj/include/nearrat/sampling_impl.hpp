#pragma once

#include <cmath>

#include "nearrat/errors.hpp"
#include "nearrat/parallel.hpp"

namespace nearrat {

template <class Indicator>
MeasureEstimate estimate_measure(const Ball& B, const Sampler& s, int workers, Indicator&& indicator) {
  if (s.n_pts < 1) throw InvalidArgument("sampler needs at least one point");
  const int d = B.dim();
  MeasureEstimate est;
  if (s.kind == Sampler::Kind::Grid) {
    const int per = grid_per_axis(s.n_pts, d);
    std::int64_t total = 1;
    for (int i = 0; i < d; ++i) total *= per;
    std::vector<std::uint8_t> verdict(static_cast<std::size_t>(total), 0);
    const std::int64_t chunks = (total + kSampleChunk - 1) / kSampleChunk;
    parallel_for(chunks, workers, [&](std::int64_t c) {
      std::vector<double> x(d);
      const std::int64_t end = std::min(total, (c + 1) * kSampleChunk);
      for (std::int64_t i = c * kSampleChunk; i < end; ++i) {
        grid_point(B, per, i, x);
        verdict[i] = indicator(x) ? 1 : 0;
      }
    });
    std::int64_t hits = 0, boundary = 0;
    std::vector<int> idx(d);
    for (std::int64_t i = 0; i < total; ++i) {
      hits += verdict[i];
      std::int64_t rem = i, stride = 1;
      bool edge = false;
      for (int a = 0; a < d && !edge; ++a) {
        const int g = static_cast<int>(rem % per);
        rem /= per;
        if (g > 0 && verdict[i - stride] != verdict[i]) edge = true;
        if (g + 1 < per && verdict[i + stride] != verdict[i]) edge = true;
        stride *= per;
      }
      boundary += edge ? 1 : 0;
    }
    const double cell = B.volume() / static_cast<double>(total);
    est.samples = total;
    est.hits = hits;
    est.value = hits * cell;
    est.half_width = boundary * cell;
    return est;
  }
  const std::int64_t chunks = (s.n_pts + kSampleChunk - 1) / kSampleChunk;
  std::vector<std::int64_t> hits(chunks, 0);
  parallel_for(chunks, workers, [&](std::int64_t c) {
    auto rng = chunk_rng(s.seed, static_cast<std::uint64_t>(c));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(d);
    const std::int64_t end = std::min(s.n_pts, (c + 1) * kSampleChunk);
    std::int64_t h = 0;
    for (std::int64_t i = c * kSampleChunk; i < end; ++i) {
      for (int a = 0; a < d; ++a) x[a] = B.lo(a) + B.side() * u(rng);
      h += indicator(x) ? 1 : 0;
    }
    hits[c] = h;
  });
  std::int64_t total_hits = 0;
  for (auto h : hits) total_hits += h;
  const double p = static_cast<double>(total_hits) / static_cast<double>(s.n_pts);
  est.samples = s.n_pts;
  est.hits = total_hits;
  est.value = p * B.volume();
  est.half_width = 1.96 * std::sqrt(p * (1 - p) / static_cast<double>(s.n_pts)) * B.volume();
  return est;
}

}  // namespace nearrat
