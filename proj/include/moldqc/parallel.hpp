#pragma once

#include <cstddef>
#include <cstdint>

namespace moldqc {

/// Global worker cap for the OpenMP kernels. 0 = use the OpenMP default.
/// Every kernel in this project writes each iteration's result into its
/// own slot and performs any cross-iteration reduction serially, so the
/// setting changes wall-clock only, never output bytes.
void set_max_jobs(int jobs);
int max_jobs();

namespace detail {
int resolve_threads(std::size_t n);
}

/// Runs fn(i) for i in [0, n) on the configured number of threads.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int threads = detail::resolve_threads(n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        fn(static_cast<std::size_t>(i));
}

}  // namespace moldqc
