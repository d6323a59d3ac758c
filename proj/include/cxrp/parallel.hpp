#pragma once

#include <cstddef>
#include <functional>

namespace cxrp {

// Runs fn(i) for i in [0, n) on up to `jobs` worker threads.
// Work is split into contiguous static blocks, so the assignment of
// iterations to workers (and therefore any per-worker scratch state) does
// not depend on scheduling. Outputs must be write-disjoint per iteration.
// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

} // namespace cxrp
