#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "g2lab/time.hpp"

namespace g2lab {

/// Splits [0, total) into consecutive segments of `length` ticks (the last one
/// possibly shorter). The plan, not the worker count, fixes every random
/// sub-stream, so results never depend on how many threads ran them.
struct SegmentPlan {
  Tick total;
  Tick length;

  std::size_t count() const;
  Tick start(std::size_t k) const;
  Tick duration(std::size_t k) const;
};

/// Evaluates fn(k) for k in [0, n) on up to `workers` threads and returns the
/// results in index order. The first exception thrown by any task is rethrown.
template <typename Fn>
auto map_segments(std::size_t n, unsigned workers, Fn&& fn) {
  using Result = decltype(fn(std::size_t{0}));
  std::vector<Result> results(n);
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(workers, 1u), n));
  if (threads <= 1) {
    for (std::size_t k = 0; k < n; ++k) results[k] = fn(k);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        results[k] = fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace g2lab
