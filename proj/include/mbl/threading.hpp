#ifndef MBL_THREADING_HPP
#define MBL_THREADING_HPP

#include <cstddef>
#include <functional>

namespace mbl {

// Worker count resolution order: set_thread_count() > MBL_THREADS > hardware.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0,n). Each index must write only its own output slot,
// so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace mbl

#endif
