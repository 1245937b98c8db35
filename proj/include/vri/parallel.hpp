#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace vri {

// VOLTERRA_RI_THREADS caps the pool; unset or 0 means hardware concurrency.
inline std::size_t worker_count() {
  std::size_t n = 0;
  if (const char* env = std::getenv("VOLTERRA_RI_THREADS")) {
    try {
      n = static_cast<std::size_t>(std::stoul(env));
    } catch (...) {
      n = 0;
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

// Calls fn(i) for i in [0, n). Each index writes its own slot, so results do not
// depend on how indices are spread over threads.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace vri

namespace vri {

// Splits [0, n) into a fixed number of contiguous batches, runs fn(i, acc) over each
// batch in order and returns the per-batch accumulators. The batch layout depends
// only on n, so reductions over the result are reproducible.
template <class Acc, class Fn>
std::vector<Acc> batched(std::size_t n, const Acc& init, Fn&& fn, std::size_t n_batches = 64) {
  n_batches = std::max<std::size_t>(1, std::min(n_batches, n));
  std::vector<Acc> acc(n_batches, init);
  parallel_for(n_batches, [&](std::size_t b) {
    const std::size_t lo = n * b / n_batches, hi = n * (b + 1) / n_batches;
    for (std::size_t i = lo; i < hi; ++i) fn(i, acc[b]);
  });
  return acc;
}

}  // namespace vri
