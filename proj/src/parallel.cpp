#include "nwfr/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace nwfr {

namespace {

std::atomic<int> g_workers{-1};  // -1: not yet initialized

int resolve_workers() {
  int w = g_workers.load();
  if (w >= 0) return w;
  int from_env = 0;
  if (const char* env = std::getenv("NWFR_WORKERS")) {
    from_env = std::atoi(env);
    if (from_env < 0) from_env = 0;
  }
  g_workers.store(from_env);
  return from_env;
}

}  // namespace

void set_workers(int n) { g_workers.store(n < 0 ? 0 : n); }

int workers() {
  int w = resolve_workers();
  if (w == 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    w = hc == 0 ? 1 : static_cast<int>(hc);
  }
  return w;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t nw =
      std::min<std::size_t>(static_cast<std::size_t>(workers()), n);
  if (nw <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::atomic<bool> has_error{false};
  std::vector<std::thread> pool;
  pool.reserve(nw);
  const std::size_t chunk = (n + nw - 1) / nw;
  for (std::size_t t = 0; t < nw; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        bool expected = false;
        if (has_error.compare_exchange_strong(expected, true)) {
          first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nwfr
