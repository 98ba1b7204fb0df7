#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace dtg {

// Worker count for per-image fan-out, capped by the DTG_NUM_WORKERS
// environment variable.
inline int worker_count(std::size_t jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  int workers = static_cast<int>(hw);
  if (const char* env = std::getenv("DTG_NUM_WORKERS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) workers = std::min(workers, cap);
    } catch (...) {
      // unparsable value: ignore the cap
    }
  }
  if (jobs < static_cast<std::size_t>(workers)) workers = static_cast<int>(jobs);
  return workers < 1 ? 1 : workers;
}

// Runs f(i) for i in [0, n). Results must be written into per-index slots by
// the caller; completion order is unspecified but exceptions are rethrown in
// index order, so behaviour is independent of the worker count.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  if (n == 0) return;
  const int workers = worker_count(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace dtg
