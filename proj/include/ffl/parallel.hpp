#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ffl {

// Every parallel kernel in this project follows the same discipline: the
// loop body writes only to per-index slots, and any floating-point
// reduction over the results happens serially in index order afterwards.
// That makes Serial and Parallel produce bit-identical output for any
// thread count, which the test suite asserts.
enum class ExecPolicy { Serial, Parallel };

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

template <typename F>
void parallel_for(std::size_t n, ExecPolicy policy, F&& body) {
#ifdef _OPENMP
    if (policy == ExecPolicy::Parallel && n > 1) {
        #pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#else
    (void)policy;
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace ffl
