#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qvoter {

/// Runs fn(i) for i in [0, count) on `threads` workers and returns results in
/// index order. fn must derive all randomness from i, so results do not depend
/// on the thread count. The first exception thrown by any task is rethrown.
template <class Fn>
auto run_replicas(std::size_t count, unsigned threads, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> results(count);
  if (count == 0) return results;
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(count)));

  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace qvoter
