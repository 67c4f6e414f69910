#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fharm {

// Global worker count used by the parallel helpers (default 1).
void set_thread_count(int n);
int thread_count();

// Runs body(begin, end) over fixed-size blocks of [0, count). Block boundaries
// depend only on count and block, never on the thread count.
void parallel_blocks(std::size_t count, std::size_t block,
                     const std::function<void(std::size_t, std::size_t)>& body);

// Sum of f(i) over [0, count), reduced block by block in a fixed order so the
// result is bitwise independent of the thread count.
double parallel_sum(std::size_t count, const std::function<double(std::size_t)>& f,
                    std::size_t block = 4096);

}  // namespace fharm
