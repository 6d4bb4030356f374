#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace pht {

/// Runs f(i) for i in [0, n) over `jobs` threads in contiguous chunks.
/// Callers write results into per-index slots, so output is independent of
/// the thread count. The first exception thrown is rethrown.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::exception_ptr> errors(t);
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < t; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i = k * n / t; i < (k + 1) * n / t; ++i) f(i);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace pht
