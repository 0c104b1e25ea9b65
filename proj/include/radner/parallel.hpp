#pragma once

#include <cstddef>
#include <functional>

namespace radner {

// Worker count used by node-parallel backward sweeps. Default 1 (serial).
int thread_count();
void set_thread_count(int n);

// Splits [0, n) into contiguous chunks and runs fn(begin, end) on each,
// using up to thread_count() threads. Writes inside fn must stay disjoint
// per index; results are order-independent.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace radner
