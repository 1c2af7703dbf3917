#include "lqmfg/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace lqmfg {

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  int w = workers > 0 ? workers
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (w <= 0) w = 1;
  w = std::min(w, count);
  if (w == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (int t = 0; t < w; ++t) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace lqmfg
