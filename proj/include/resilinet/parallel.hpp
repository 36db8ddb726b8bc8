#pragma once

#include <cstddef>
#include <functional>

namespace resilinet {

/// Worker count: `requested` if non-zero, else hardware concurrency; capped by
/// RESILINET_THREADS when that variable holds a positive integer.
std::size_t worker_count(std::size_t requested = 0);

/// Runs fn(0) ... fn(n - 1) on up to `workers` threads. Tasks must write to disjoint
/// outputs. The exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace resilinet
