#pragma once

#include <cstddef>
#include <functional>

namespace ldpx {

/// Worker count: LDP_EXPAND_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();
/// Overrides the worker count for the calling process; 0 restores the default.
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n) over static contiguous chunks. The first exception
/// thrown by any worker is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ldpx
