#include "agglo/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace agglo {

namespace {

// Below this many rows the thread start-up cost dominates.
constexpr Index kMinRowsForThreads = 256;

unsigned read_thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("AGGLO_MVC_THREADS")) {
    try {
      long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return hw;
}

}  // namespace

unsigned max_threads() {
  static const unsigned cap = read_thread_cap();
  return cap;
}

void parallel_rows(Index n, const std::function<void(Index, Index)>& body) {
  const unsigned workers = max_threads();
  if (workers <= 1 || n < kMinRowsForThreads) {
    body(0, n);
    return;
  }
  const Index chunks = std::min<Index>(workers, n);
  const Index step = (n + chunks - 1) / chunks;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(chunks));
  for (Index begin = step; begin < n; begin += step) {
    pool.emplace_back([&body, begin, n, step] { body(begin, std::min(n, begin + step)); });
  }
  body(0, std::min(n, step));
}

}  // namespace agglo
