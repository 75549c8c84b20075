#include "swvi/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace swvi {

namespace {

std::atomic<int> g_max_threads{-1};  // -1 = not yet resolved

int resolve_from_env() {
  const char* env = std::getenv("SWVI_THREADS");
  int n = 0;
  if (env != nullptr) n = std::atoi(env);
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return n > 0 ? n : 1;
}

}  // namespace

void set_max_threads(int n) { g_max_threads.store(n <= 0 ? resolve_from_env() : n); }

int max_threads() {
  int n = g_max_threads.load();
  if (n <= 0) {
    n = resolve_from_env();
    g_max_threads.store(n);
  }
  return n;
}

void parallel_for(int n, const std::function<void(int)>& body) {
  if (n <= 0) return;
  int workers = std::min(max_threads(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error = nullptr;
  std::atomic<bool> failed{false};
  std::atomic<int> error_guard{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      // contiguous blocks; block boundaries depend only on (n, workers)
      int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
      int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
      for (int i = lo; i < hi; ++i) {
        if (failed.load(std::memory_order_relaxed)) return;
        try {
          body(i);
        } catch (...) {
          if (error_guard.fetch_add(1) == 0) first_error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace swvi
