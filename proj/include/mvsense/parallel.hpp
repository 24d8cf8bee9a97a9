#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace mvsense {

/// Worker count for `jobs` tasks; `requested` <= 0 means hardware concurrency.
inline int worker_count(int requested, int jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, std::max(1, jobs));
}

/// Runs fn(i) for i in [0, n) on a small thread pool. After the first
/// failure no new indices start; the exception of the lowest failing index
/// is rethrown once every worker has stopped.
template <typename Fn> void parallel_for(int n, int workers, Fn fn) {
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::exception_ptr err;
  int err_index = std::numeric_limits<int>::max();
  auto work = [&] {
    while (!failed.load()) {
      const int i = next.fetch_add(1);
      if (i >= n)
        return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
        failed = true;
      }
    }
  };
  const int w = worker_count(workers, n);
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t)
      pool.emplace_back(work);
    for (auto &t : pool)
      t.join();
  }
  if (err)
    std::rethrow_exception(err);
}

} // namespace mvsense
