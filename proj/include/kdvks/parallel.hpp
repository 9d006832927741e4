#pragma once

#include <cstddef>
#include <functional>

namespace kdvks {

/// Worker count from KDVKS_WORKERS (default: hardware concurrency, at least 1).
int default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Indices are
/// handed out dynamically; the first exception thrown is rethrown after all
/// workers have stopped.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace kdvks
