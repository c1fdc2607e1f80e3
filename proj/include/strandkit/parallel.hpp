#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace strandkit {

// Global worker count for per-strand loops. 1 = serial.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0, n). Work is chunked across threads; results must be
// written to index i of a preallocated buffer so reductions stay ordered and
// bit-reproducible regardless of thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace strandkit
