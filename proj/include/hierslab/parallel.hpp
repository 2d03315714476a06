#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hierslab {

/// Default worker count: $HIERSLAB_THREADS if set, else hardware concurrency.
inline int default_threads() {
  if (const char* env = std::getenv("HIERSLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs task(0..n-1) on up to `threads` workers. Tasks must write results
/// into pre-sized slots indexed by task id, which keeps the merged output
/// independent of scheduling. Rethrows the lowest-index task failure.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task) {
  if (n == 0) return;
  const auto workers = static_cast<std::size_t>(std::clamp<long>(threads <= 0 ? default_threads() : threads, 1,
                                                                 static_cast<long>(n)));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hierslab
