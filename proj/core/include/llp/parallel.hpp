#pragma once

#include <cstddef>
#include <functional>

namespace llp {

// Global worker cap for parallel_for (default: hardware concurrency,
// overridable via set_max_threads or the LLP_THREADS environment variable).
int max_threads();
void set_max_threads(int n);

// Runs f(0..n-1) over a transient worker pool. Tasks are indexed, so
// results must be written into preallocated slots; outputs are then
// independent of the worker count. Nested calls degrade to serial.
// The first exception (lowest task index) is rethrown after the loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace llp
