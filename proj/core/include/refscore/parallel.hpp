#pragma once

#include <cstddef>
#include <functional>

namespace refscore {

// Process-wide worker count used by parallel_for. Defaults to 1.
void set_thread_count(unsigned n);
unsigned thread_count();

// Calls fn(i) for every i in [0, n). Work items must write only to their own
// slots; with that discipline results do not depend on the thread count.
// The exception raised by the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace refscore
