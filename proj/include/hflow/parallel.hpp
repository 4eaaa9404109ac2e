#pragma once

#include <functional>

namespace hflow {

// Worker cap for data-parallel loops; 1 (the default) runs everything on the
// calling thread.  Parallel callers must write to disjoint per-index slots
// and merge in index order, so results never depend on this setting.
void set_worker_threads(int n);
int worker_threads();

// Runs fn(0..n-1), each index exactly once.  The first exception thrown by
// any worker is rethrown on the calling thread after all workers finish.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace hflow
