#pragma once

#include <cstddef>
#include <functional>

namespace depthfill::parallel {

// Upper bound on worker threads used by parallel_for. 0 selects the
// machine's hardware concurrency. Results never depend on this value.
void set_thread_count(unsigned n);
[[nodiscard]] unsigned thread_count();

// Calls fn(i) for every i in [0, n). Each index is processed exactly once;
// callers must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace depthfill::parallel
