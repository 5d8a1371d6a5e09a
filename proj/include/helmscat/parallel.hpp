#pragma once

#include <cstddef>
#include <functional>

namespace helmscat {

// Thread count used when a caller passes 0: HELM_SCATTER_THREADS if set,
// otherwise std::thread::hardware_concurrency().
int default_thread_count();

// Resolves a requested count (0 = default) to a positive number.
int resolve_threads(int requested);

// Runs body(i) for i in [0, n) on `threads` workers using a static block
// partition. Each index is visited exactly once, so results written per index
// do not depend on the thread count. The first exception thrown by any worker
// is rethrown on the calling thread.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace helmscat
