#pragma once

#include <cstddef>
#include <functional>

namespace cutsel {

// Resolves a worker count: explicit value if > 0, else the
// CUTPOINT_SELECT_WORKERS environment variable, else hardware concurrency.
int resolve_workers(int requested);

// Runs fn(i) for i in [0, count) on up to `workers` threads. Work items must
// be independent; the first exception thrown by any item is rethrown on the
// calling thread after all threads join.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace cutsel
