#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fracconv {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

// Evaluates fn(i) for i in [0, count) on a pool of workers that pull indices
// from a shared counter. Results land in slot i regardless of which worker
// produced them, so any reduction done afterwards in index order is
// independent of the schedule. The exception of the lowest failing index is
// rethrown.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, int workers, Fn&& fn) {
  std::vector<T> out(count);
  const int w = std::min<int>(resolve_workers(workers), static_cast<int>(std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = count;
  std::exception_ptr err;
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  if (w <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (int k = 0; k < w; ++k) pool.emplace_back(body);
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace fracconv
