#pragma once

#include <cstddef>
#include <functional>

namespace sentinel {

/// Effective worker count: `hint` (0 = hardware concurrency), capped by the
/// REGIME_SENTINEL_THREADS environment variable when set.
unsigned resolve_threads(unsigned hint);

/// Runs fn(0..count-1) across `threads` workers. Results must be written to
/// pre-sized slots so the merge order stays deterministic. The first worker
/// exception is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace sentinel
