#pragma once

#include <cstddef>
#include <functional>

namespace gait3d {

// Worker count used when a caller passes 0: hardware concurrency, at least 1.
unsigned default_threads();

// Keeps large freed blocks in the heap instead of returning them to the
// OS; tensors of a few MB are reallocated every training step and would
// otherwise page-fault on each first touch. No-op outside glibc.
void tune_allocator();

/// Calls fn(i) for every i in [0, n) on up to `threads` workers, using a
/// fixed contiguous partition. Exceptions propagate to the caller (the
/// first one by index).
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace gait3d
