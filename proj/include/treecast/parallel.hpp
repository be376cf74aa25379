#pragma once

#include <cstddef>
#include <functional>

namespace treecast {

/// Worker count: TREECAST_THREADS if set to a positive integer, otherwise
/// std::thread::hardware_concurrency() (at least 1).
unsigned worker_count();

/// Runs body(begin, end) over disjoint chunks of [0, n). Chunk boundaries
/// depend on the worker count, so callers must keep per-index work
/// independent of the chunking.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  unsigned workers = 0);

}  // namespace treecast
