#pragma once

#include <cstddef>
#include <functional>

namespace quadray {

/// Worker count: QUADRAY_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, count). Work is split into contiguous blocks so
/// each index is handled exactly once; callers write results by index, which
/// keeps output independent of the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace quadray
