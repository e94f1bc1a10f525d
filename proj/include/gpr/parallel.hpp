#ifndef GPR_PARALLEL_HPP
#define GPR_PARALLEL_HPP

// Worker-thread control for the OpenMP kernels. The cap comes from the
// RS_THREADS environment variable, read once per process; an unset or
// invalid value means "use all hardware threads".
//
// Every parallel loop in this codebase writes disjoint output elements and
// performs reductions in a fixed serial order, so results are bit-identical
// for any thread count.

namespace gpr::par {

// Number of worker threads parallel regions may use (>= 1).
int threads();

// True when compiled with OpenMP support.
bool openmp_enabled();

}  // namespace gpr::par

#endif
