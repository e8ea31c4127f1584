#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cardiomech {

// Parallel loop over [0, n). Iterations must be independent.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#else
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#endif
}

// Sum of fn(i) over [0, n). Accumulation runs in fixed-size chunks whose
// partials are combined in index order, so the result is bit-identical for
// any thread count.
template <typename Fn>
double deterministic_sum(std::ptrdiff_t n, Fn&& fn) {
    constexpr std::ptrdiff_t kChunk = 4096;
    const std::ptrdiff_t nchunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
        const std::ptrdiff_t lo = c * kChunk;
        const std::ptrdiff_t hi = lo + kChunk < n ? lo + kChunk : n;
        double s = 0.0;
        for (std::ptrdiff_t i = lo; i < hi; ++i) s += fn(i);
        partial[static_cast<std::size_t>(c)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

inline int hardware_threads() {
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

} // namespace cardiomech
