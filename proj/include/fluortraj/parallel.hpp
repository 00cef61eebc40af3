#pragma once

#include <cstddef>
#include <functional>

namespace fluortraj {

// 0 means: FLUORTRAJ_THREADS if set, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

// Runs fn(i) for i in [0, n) on `threads` workers; rethrows the first exception.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace fluortraj
