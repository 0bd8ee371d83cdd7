#pragma once

#include <cstddef>
#include <functional>

namespace regap {

/// Worker cap: REGAP_THREADS env var if set, else hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, n). Work is split across workers; fn must write
/// only to per-index slots so that results never depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace regap
