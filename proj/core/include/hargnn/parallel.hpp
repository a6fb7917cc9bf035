#pragma once

#include <cstddef>
#include <functional>

namespace hargnn {

/// Worker count: the process-wide override if set, else HARGNN_THREADS, else
/// hardware concurrency. Always >= 1.
std::size_t worker_count();

/// Forces a worker count for the rest of the process (1 = deterministic
/// single-threaded reference path). 0 restores the default resolution.
void set_worker_count(std::size_t n);

/// Runs body(i) for i in [0, n), chunked over worker_count() threads. Each
/// index is handled by exactly one thread; results must not depend on which.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hargnn
