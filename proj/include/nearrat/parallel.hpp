#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nearrat {

// Runs fn(i) for i in [0, n_tasks) on up to `workers` threads. Tasks are
// claimed through an atomic counter; callers write results into slot i, so the
// merged output never depends on scheduling. The first exception thrown by a
// task is rethrown after all threads join.
template <class Fn>
void parallel_for(std::int64_t n_tasks, int workers, Fn&& fn) {
  if (n_tasks <= 0) return;
  const int threads = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(workers, n_tasks)));
  if (threads == 1) {
    for (std::int64_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&]() {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::int64_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Splits [lo, hi] into consecutive closed chunks of at most `size` values.
inline std::vector<std::pair<std::int64_t, std::int64_t>> split_range(std::int64_t lo, std::int64_t hi,
                                                                      std::int64_t size) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  if (size < 1) size = 1;
  for (std::int64_t a = lo; a <= hi; a += size) out.emplace_back(a, std::min(hi, a + size - 1));
  return out;
}

}  // namespace nearrat
