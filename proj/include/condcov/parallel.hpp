#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace condcov {

inline int default_worker_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(0..job_count-1) on up to `workers` threads. Jobs must write only
/// to their own slots; callers reduce afterwards in index order, which keeps
/// every pipeline worker-count invariant. If jobs throw, the exception from
/// the lowest job index is rethrown after all workers have joined.
inline void parallel_for(std::size_t job_count, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (job_count == 0) return;
  const std::size_t width =
      workers <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(workers), job_count);
  if (width == 1) {
    for (std::size_t i = 0; i < job_count; ++i) fn(i);
    return;
  }

  std::vector<std::exception_ptr> errors(job_count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= job_count) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(width);
  for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace condcov
