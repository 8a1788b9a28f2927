#include "alotune/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace alotune {

namespace {
std::atomic<int> g_max_threads{1};
}

void set_max_threads(int n) { g_max_threads.store(std::max(1, n)); }

int max_threads() { return g_max_threads.load(); }

void parallel_blocks(Index total, const std::function<void(Index, Index)>& fn) {
  if (total <= 0) return;
  const Index nblocks = (total + kColumnBlock - 1) / kColumnBlock;
  const int workers = static_cast<int>(std::min<Index>(max_threads(), nblocks));

  if (workers <= 1) {
    for (Index b = 0; b < nblocks; ++b) {
      const Index begin = b * kColumnBlock;
      fn(begin, std::min(begin + kColumnBlock, total));
    }
    return;
  }

  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto drain = [&] {
    try {
      for (;;) {
        const Index b = next.fetch_add(1);
        if (b >= nblocks) break;
        const Index begin = b * kColumnBlock;
        fn(begin, std::min(begin + kColumnBlock, total));
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(drain);
  drain();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace alotune
