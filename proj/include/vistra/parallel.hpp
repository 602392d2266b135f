#pragma once

// Include this instead of <omp.h> so kernels still build without OpenMP.

#if defined(_OPENMP)
#include <omp.h>
namespace vistra {
constexpr bool use_omp = true;
} // namespace vistra
#else
namespace vistra {
constexpr bool use_omp = false;
} // namespace vistra
inline int omp_get_thread_num() { return 0; }
inline int omp_get_max_threads() { return 1; }
inline void omp_set_num_threads(int) {}
#endif
