#ifndef FDPOMM_PARALLEL_HPP_
#define FDPOMM_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fdpomm {

// Worker count used by parallel_for; 1 unless set (the CLI's --threads).
std::size_t default_threads();
void set_default_threads(std::size_t threads);

// Runs body(i) for i in [0, n). Callers write results into slot i, so the
// outcome never depends on the thread count. The first exception thrown by
// any worker is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t threads = default_threads()) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace fdpomm

#endif  // FDPOMM_PARALLEL_HPP_
