#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rhlab {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> n{1};
  return n;
}
}  // namespace detail

/// Worker count used by parallel_for. Results never depend on it.
inline unsigned thread_count() { return detail::thread_setting().load(); }
inline void set_thread_count(unsigned n) { detail::thread_setting().store(std::max(1u, n)); }

/// Runs fn(i) for i in [0, n). Work items must write only to slot i of some
/// preallocated output; reductions happen afterwards in index order.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned t = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Chunked variant for cheap bodies: fn(begin, end) over contiguous blocks
/// whose boundaries depend only on n and chunk.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t chunk, Fn&& fn) {
  const std::size_t blocks = (n + chunk - 1) / chunk;
  parallel_for(blocks, [&](std::size_t b) { fn(b * chunk, std::min(n, (b + 1) * chunk)); });
}

}  // namespace rhlab
