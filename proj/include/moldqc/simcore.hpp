#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "moldqc/rng.hpp"

namespace moldqc {

/// Cross-WLF viscosity constants that are not varied per shot.
struct CrossWlfConstants {
    double tau_star_pa = 25000.0;
    double d2_ref_temp_k = 263.15;
    double a1 = 28.3;
    double a2_k = 51.6;
};

/// The six inputs varied per shot.
struct ProcessParams {
    double cooling_water_temp_k = 313.4;
    double melt_temp_k = 503.2;
    double flowrate_cm3_s = 40.0;
    double packing_pressure_bar = 400.1;
    double power_law_n = 0.23;
    double d1_pa_s = 5.8e13;

    void validate() const;  // throws std::domain_error
};

struct ParamRange {
    double median = 0.0;
    double iqr_low = 0.0;
    double iqr_high = 0.0;

    /// Normal-equivalent standard deviation of an interquartile width.
    double sigma() const { return (iqr_high - iqr_low) / 1.349; }
};

struct ParamDistributions {
    ParamRange cooling_water_temp_k{313.4, 310.1, 316.5};
    ParamRange melt_temp_k{503.2, 500.8, 505.4};
    ParamRange flowrate_cm3_s{40.0, 38.1, 41.9};
    ParamRange packing_pressure_bar{400.1, 381.8, 417.9};
    ParamRange power_law_n{0.23, 0.21, 0.25};
    ParamRange d1_pa_s{5.8e13, 5.6e13, 6.0e13};

    void validate() const;
};

/// Knobs of the per-shot signal generator.
struct SeriesShape {
    double packing_duration_s = 10.0;
    double ram_start_mm = 200.0;
    double screw_area_cm2 = 8.0;
    double flow_ref_cm3_s = 40.0;
    double fill_pressure_coeff_bar = 350.0;
    double switchover_tau_s = 0.3;
    double cavity_lag_tau_s = 0.8;
    double cavity_gain = 0.85;
    double cavity_gain_melt_slope_per_k = 0.004;
    double release_tau_base_s = 6.0;
    double release_tau_cool_slope_s_per_k = 0.15;
    double release_tau_melt_slope_s_per_k = 0.05;
    double creep_depth_mm = 2.0;
    double creep_tau_s = 2.0;
    double shear_rate_ref_per_s = 100.0;
};

/// Standardization references for the shrinkage channels. Derived from
/// the parameter distributions unless a config overrides them.
struct ShrinkageRefs {
    double melt_ref_k = 0.0, melt_sigma_k = 1.0;
    double pack_ref_bar = 0.0, pack_sigma_bar = 1.0;
    double cool_ref_k = 0.0, cool_sigma_k = 1.0;
    double log_visc_ref = 0.0, log_visc_sigma = 1.0;
};

/// Linear shrinkage response. Coefficient order: standardized melt
/// temperature, packing pressure, cooling water temperature, log
/// reference viscosity.
struct ShrinkageModel {
    double base = 0.015;
    std::array<double, 4> coefficients = {2.0e-3, -3.0e-3, 1.0e-3, 0.8e-3};
};

struct SimConfig {
    double nominal_opening_distance_mm = 100.0;
    double shot_volume_cm3 = 120.0;
    double cycle_duration_s = 35.0;
    double sample_rate_hz = 50.0;
    CrossWlfConstants cross_wlf;
    SeriesShape series;
    ShrinkageModel shrinkage;
    ShrinkageRefs refs;
    double noise_std_mm = 0.02;
    double label_sigma_multiplier = 2.0;
    uint64_t rng_seed = 0;

    std::size_t sample_count() const;
    void validate() const;
};

struct MouldingRun {
    int64_t run_id = 0;
    ProcessParams params;
    std::vector<double> injection_pressure_bar;
    std::vector<double> cavity_pressure_bar;
    std::vector<double> ram_position_mm;
    double opening_distance_mm = 0.0;
    std::optional<int> label;  // 1 = reject, 0 = accept
};

struct LabelingSummary {
    double mu_mm = 0.0;
    double sigma_mm = 0.0;
    double k = 2.0;
    int64_t reject_count = 0;
    int64_t accept_count = 0;
};

/// Per-run noise inputs, kept explicit so a run is a pure function of
/// its arguments.
struct NoiseDraws {
    double shrink_z = 0.0;
};

/// Inverse-CDF sampling: parameter = median + sigma * probit(u).
/// u entries follow the field order of ProcessParams.
ProcessParams sample_params(const ParamDistributions& dists, const std::array<double, 6>& u);
ProcessParams sample_params(const ParamDistributions& dists, Rng& rng);

double cross_wlf_viscosity(double temp_k, double shear_rate_per_s, double power_law_n,
                           double d1_pa_s, const CrossWlfConstants& consts);
double cross_wlf_viscosity(double temp_k, double shear_rate_per_s, const ProcessParams& params,
                           const CrossWlfConstants& consts);

ShrinkageRefs derive_shrinkage_refs(const ParamDistributions& dists, const CrossWlfConstants& wlf,
                                    double shear_rate_ref_per_s);

/// Config with shrinkage references derived from `dists`.
SimConfig default_sim_config(const ParamDistributions& dists = ParamDistributions{});

MouldingRun simulate_run(const ProcessParams& params, const SimConfig& cfg, int64_t run_id,
                         const NoiseDraws& noise);

/// Labels by distance from the dataset mean: reject iff |d - mu| > k * sigma
/// (strict; sigma is the population standard deviation).
std::pair<std::vector<int>, LabelingSummary> label_dataset(std::span<const double> distances,
                                                           double k);

/// Samples, simulates and labels `n` runs. Parallel over runs; each run's
/// stream is derived from (seed, run_id), so outputs do not depend on the
/// worker count.
std::vector<MouldingRun> generate_dataset(const ParamDistributions& dists, const SimConfig& cfg,
                                          std::size_t n, uint64_t seed,
                                          LabelingSummary* summary_out = nullptr);

}  // namespace moldqc
