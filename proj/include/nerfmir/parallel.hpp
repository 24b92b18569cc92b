#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nerfmir {

/// Execution policy for the data-parallel kernels. Exec::serial is the
/// reference path the tests and the benchmark baseline use; Exec::parallel
/// runs the same per-element work under OpenMP. Kernels whose elements are
/// independent produce bit-identical results under both policies.
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

/// Runs fn(i) for i in [0, n). Iterations must be independent.
template <typename F>
void parallel_for(std::size_t n, Exec exec, F&& fn) {
  if (exec == Exec::parallel) {
    const long long nn = static_cast<long long>(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long i = 0; i < nn; ++i) fn(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

}  // namespace nerfmir
