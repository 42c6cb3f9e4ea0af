#pragma once

// Index-parallel loops on std::thread. Work item i always writes slot i, so
// results do not depend on the number of workers.

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace kplab {

inline int& default_threads_ref() {
  static int n = 1;
  return n;
}

/// Worker count used when a call passes threads <= 0.
inline int default_threads() { return default_threads_ref(); }
inline void set_default_threads(int n) { default_threads_ref() = std::max(1, n); }

/// Calls fn(i) for i in [0, n). Exceptions are rethrown for the smallest
/// failing index.
template <class Fn>
void parallel_for(int n, Fn&& fn, int threads = 0) {
  if (n <= 0) return;
  const int workers = std::clamp(threads > 0 ? threads : default_threads(), 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  int failed_index = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// out[i] = fn(i), merged by index.
template <class T, class Fn>
std::vector<T> parallel_map(int n, Fn&& fn, int threads = 0) {
  std::vector<T> out(std::max(n, 0));
  parallel_for(n, [&](int i) { out[i] = fn(i); }, threads);
  return out;
}

}  // namespace kplab
