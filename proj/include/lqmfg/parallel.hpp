#pragma once

#include <functional>

namespace lqmfg {

// Runs fn(0..count-1) on up to `workers` threads (0 = hardware concurrency).
// Items must write only to their own slots; reductions happen afterwards in
// index order, so results do not depend on the worker count.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace lqmfg
