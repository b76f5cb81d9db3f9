#pragma once

#include <cstddef>
#include <functional>

namespace rbb {

/// Number of worker threads used by the Monte Carlo loops. Reads RBB_THREADS,
/// falling back to std::thread::hardware_concurrency().
[[nodiscard]] std::size_t worker_count();

/// Runs body(i) for i in [0, count). Work is split into contiguous chunks and
/// every result must be written to slot i by the body, so output does not
/// depend on scheduling. The first exception thrown by any body is rethrown.
/// Calls made from inside a worker run serially.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

}  // namespace rbb
