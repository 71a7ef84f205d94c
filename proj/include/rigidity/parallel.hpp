#pragma once

#include <cstddef>
#include <functional>

namespace rigidity {

/// Process-wide worker count used by data-parallel loops. Values < 1 are
/// clamped to 1.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n). Indices are split into contiguous static
/// blocks, one per worker. Callers write results into per-index slots and
/// reduce sequentially afterwards, so outputs never depend on the worker
/// count. The first exception thrown by any worker is rethrown here.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rigidity
