#pragma once

#include <cstdint>
#include <functional>

namespace ts {

// n <= 0 restores the default (TERRASEG_THREADS env if set, else min(cores, 8))
void set_thread_count(int n);
int thread_count();

// Splits [0, n) into contiguous chunks and runs fn(begin, end) across the
// worker pool. Chunk boundaries depend only on n, so any computation in which
// every output element is produced entirely within one fn call is bitwise
// reproducible regardless of the thread count. Nested calls run inline.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace ts
