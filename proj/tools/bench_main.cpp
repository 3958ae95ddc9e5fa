// Times each parallel kernel against its single-worker run and verifies
// the outputs are bit-identical. Usage: moldqc_bench [n_runs] [threads]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <omp.h>

#include "moldqc/gbm.hpp"
#include "moldqc/parallel.hpp"
#include "moldqc/pipeline.hpp"
#include "moldqc/rng.hpp"
#include "moldqc/selectsplit.hpp"
#include "moldqc/simcore.hpp"
#include "moldqc/tsfeat.hpp"

using namespace moldqc;
using clock_type = std::chrono::steady_clock;

namespace {

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

void report(const char* kernel, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-28s %10.1f ms %10.1f ms %7.2fx   %s\n", kernel, serial_ms, parallel_ms,
                serial_ms / parallel_ms, identical ? "identical" : "DIFFERS");
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t n_runs = argc > 1 ? static_cast<std::size_t>(std::atol(argv[1])) : 64;
    const int threads = argc > 2 ? std::atoi(argv[2]) : omp_get_max_threads();
    std::printf("runs=%zu threads=%d\n", n_runs, threads);
    std::printf("%-28s %13s %13s %9s\n", "kernel", "jobs=1", "parallel", "speedup");

    const ParamDistributions dists;
    const SimConfig cfg = default_sim_config(dists);

    set_max_jobs(1);
    auto t0 = clock_type::now();
    const auto runs_serial = generate_dataset(dists, cfg, n_runs, 42);
    const double sim_serial = ms_since(t0);
    set_max_jobs(threads);
    t0 = clock_type::now();
    const auto runs_parallel = generate_dataset(dists, cfg, n_runs, 42);
    const double sim_parallel = ms_since(t0);
    bool same = runs_serial.size() == runs_parallel.size();
    for (std::size_t i = 0; same && i < runs_serial.size(); ++i)
        same = runs_serial[i].opening_distance_mm == runs_parallel[i].opening_distance_mm &&
               runs_serial[i].injection_pressure_bar == runs_parallel[i].injection_pressure_bar &&
               runs_serial[i].cavity_pressure_bar == runs_parallel[i].cavity_pressure_bar &&
               runs_serial[i].ram_position_mm == runs_parallel[i].ram_position_mm;
    report("simulate", sim_serial, sim_parallel, same);

    const FeatureCatalog catalog = default_catalog();
    set_max_jobs(1);
    t0 = clock_type::now();
    const FeatureMatrix feat_serial = extract_matrix(runs_serial, catalog);
    const double ext_serial = ms_since(t0);
    set_max_jobs(threads);
    t0 = clock_type::now();
    const FeatureMatrix feat_parallel = extract_matrix(runs_serial, catalog);
    const double ext_parallel = ms_since(t0);
    same = std::memcmp(feat_serial.values.data(), feat_parallel.values.data(),
                       feat_serial.values.size() * sizeof(double)) == 0;
    report("extract_features", ext_serial, ext_parallel, same);

    std::vector<double> distances(n_runs);
    for (std::size_t i = 0; i < n_runs; ++i) distances[i] = runs_serial[i].opening_distance_mm;
    SelectionConfig sel;
    sel.k = 300;
    set_max_jobs(1);
    t0 = clock_type::now();
    const SelectionResult sel_serial = select_top_k(feat_serial, distances, sel);
    const double sel_serial_ms = ms_since(t0);
    set_max_jobs(threads);
    t0 = clock_type::now();
    const SelectionResult sel_parallel = select_top_k(feat_serial, distances, sel);
    const double sel_parallel_ms = ms_since(t0);
    same = sel_serial.selected.size() == sel_parallel.selected.size();
    for (std::size_t i = 0; same && i < sel_serial.selected.size(); ++i)
        same = sel_serial.selected[i].name == sel_parallel.selected[i].name &&
               sel_serial.selected[i].correlation == sel_parallel.selected[i].correlation;
    report("select_top_k", sel_serial_ms, sel_parallel_ms, same);

    // Synthetic regression problem for the tree grower.
    const std::size_t gn = 1500, gf = 120;
    std::vector<double> X(gn * gf), y(gn);
    Rng rng(7);
    for (auto& v : X) v = rng.uniform01();
    for (std::size_t i = 0; i < gn; ++i)
        y[i] = X[i * gf] * 3.0 + X[i * gf + 1] * X[i * gf + 2] + 0.1 * rng.normal();
    const RowMatrixView view{X.data(), gn, gf};
    GbmHyperParams hp;
    hp.n_estimators = 60;
    hp.num_leaves = 31;
    hp.subsample = 0.8;
    hp.min_child_samples = 5;
    set_max_jobs(1);
    t0 = clock_type::now();
    const GbmModel m_serial = fit(view, y, {}, hp, Objective::squared, 9);
    const double fit_serial = ms_since(t0);
    set_max_jobs(threads);
    t0 = clock_type::now();
    const GbmModel m_parallel = fit(view, y, {}, hp, Objective::squared, 9);
    const double fit_parallel = ms_since(t0);
    const std::vector<double> p_serial = predict(m_serial, view);
    const std::vector<double> p_parallel = predict(m_parallel, view);
    same = std::memcmp(p_serial.data(), p_parallel.data(), gn * sizeof(double)) == 0;
    report("gbm_fit", fit_serial, fit_parallel, same);

    SearchSpace space;
    space.n_draws = 6;
    space.n_estimators = {40};
    space.num_leaves = {15, 31};
    space.min_child_samples = {5};
    set_max_jobs(1);
    t0 = clock_type::now();
    const SearchResult rs_serial = random_search(view, y, {}, space, CvScore::mae, 5, false, 11);
    const double rs_serial_ms = ms_since(t0);
    set_max_jobs(threads);
    t0 = clock_type::now();
    const SearchResult rs_parallel = random_search(view, y, {}, space, CvScore::mae, 5, false, 11);
    const double rs_parallel_ms = ms_since(t0);
    same = rs_serial.best_score == rs_parallel.best_score;
    for (std::size_t i = 0; same && i < rs_serial.log.size(); ++i)
        same = rs_serial.log[i].cv_score == rs_parallel.log[i].cv_score;
    report("random_search", rs_serial_ms, rs_parallel_ms, same);
    return 0;
}
