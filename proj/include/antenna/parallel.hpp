#pragma once

#include <cstddef>
#include <functional>

namespace antenna {

/// Worker count: ANTENNA_THREADS if set to a positive integer, else hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, n) over contiguous, disjoint index blocks.
/// Every index is evaluated exactly once, so outputs written per index are
/// identical to a serial loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace antenna
