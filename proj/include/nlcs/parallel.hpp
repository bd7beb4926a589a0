#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace nlcs {

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> threads{1};
  return threads;
}
// Set inside pool workers so nested loops run inline.
inline bool& in_worker() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

/// Worker count used by parallel_for. Results never depend on this value:
/// every parallel loop writes disjoint outputs and reduces in index order.
inline void set_num_threads(int threads) {
  detail::thread_setting().store(std::max(1, threads));
}

inline int num_threads() { return detail::thread_setting().load(); }

// Static block partition of [begin, end). fn(i) must only write state owned
// by index i.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn,
                  std::size_t min_block = 1024) {
  if (end <= begin) return;
  const std::size_t count = end - begin;
  std::size_t workers = static_cast<std::size_t>(num_threads());
  workers = std::min(workers, (count + min_block - 1) / min_block);
  if (workers <= 1 || detail::in_worker()) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * block;
    const std::size_t hi = std::min(end, lo + block);
    pool.emplace_back([&, w, lo, hi] {
      detail::in_worker() = true;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace nlcs
