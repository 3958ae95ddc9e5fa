#include "moldqc/parallel.hpp"

#include <omp.h>

#include <atomic>

namespace moldqc {

namespace {
std::atomic<int> g_max_jobs{0};
}

void set_max_jobs(int jobs) { g_max_jobs.store(jobs < 0 ? 0 : jobs); }

int max_jobs() { return g_max_jobs.load(); }

namespace detail {

int resolve_threads(std::size_t n) {
    if (omp_in_parallel()) return 1;  // no nested teams
    int t = g_max_jobs.load();
    if (t == 0) t = omp_get_max_threads();
    if (static_cast<std::size_t>(t) > n) t = static_cast<int>(n);
    return t;
}

}  // namespace detail

}  // namespace moldqc
