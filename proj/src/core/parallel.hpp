#pragma once
#include <functional>

namespace amfm {

// Runs fn(i) for i in [0, count) on up to `threads` workers. Indices are
// dealt in contiguous chunks; fn must only write state owned by its index,
// which keeps results identical to the serial order.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

} // namespace amfm
