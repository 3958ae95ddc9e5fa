#include "moldqc/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "moldqc/common.hpp"
#include "moldqc/parallel.hpp"

namespace moldqc {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::domain_error(msg);
}

void check_range(const ParamRange& r, const char* name) {
    if (!(r.iqr_low < r.median && r.median < r.iqr_high))
        throw std::domain_error(std::string("parameter distribution for ") + name +
                                ": requires iqr_low < median < iqr_high");
}

}  // namespace

void ProcessParams::validate() const {
    const double fields[] = {cooling_water_temp_k, melt_temp_k,       flowrate_cm3_s,
                             packing_pressure_bar, power_law_n,       d1_pa_s};
    for (double f : fields) require(std::isfinite(f) && f > 0.0, "process parameters must be finite and positive");
    require(power_law_n <= 1.0, "power law index must lie in (0, 1]");
}

void ParamDistributions::validate() const {
    check_range(cooling_water_temp_k, "cooling_water_temp_k");
    check_range(melt_temp_k, "melt_temp_k");
    check_range(flowrate_cm3_s, "flowrate_cm3_s");
    check_range(packing_pressure_bar, "packing_pressure_bar");
    check_range(power_law_n, "power_law_n");
    check_range(d1_pa_s, "d1_pa_s");
}

std::size_t SimConfig::sample_count() const {
    const double exact = sample_rate_hz * cycle_duration_s;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9 * std::max(1.0, exact))
        throw std::domain_error("sample_rate * cycle_duration must be an integer sample count");
    return static_cast<std::size_t>(rounded);
}

void SimConfig::validate() const {
    require(nominal_opening_distance_mm > 0.0, "nominal opening distance must be positive");
    require(shot_volume_cm3 > 0.0, "shot volume must be positive");
    require(cycle_duration_s > 0.0 && sample_rate_hz > 0.0, "cycle duration and sample rate must be positive");
    require(sample_count() >= 100, "sample count must be at least 100");
    require(noise_std_mm >= 0.0, "noise std must be non-negative");
    require(label_sigma_multiplier > 0.0, "label sigma multiplier must be positive");
    require(cross_wlf.tau_star_pa > 0.0, "tau* must be positive");
    require(series.packing_duration_s > 0.0, "packing duration must be positive");
    require(series.packing_duration_s < cycle_duration_s, "packing must end within the cycle");
    require(refs.melt_sigma_k > 0.0 && refs.pack_sigma_bar > 0.0 && refs.cool_sigma_k > 0.0 &&
                refs.log_visc_sigma > 0.0,
            "shrinkage standardization scales must be positive");
}

ProcessParams sample_params(const ParamDistributions& dists, const std::array<double, 6>& u) {
    dists.validate();
    for (double q : u) require(q > 0.0 && q < 1.0, "quantile must lie strictly in (0,1)");

    const auto draw = [](const ParamRange& r, double q) {
        return r.median + r.sigma() * inverse_normal_cdf(q);
    };
    ProcessParams p;
    p.cooling_water_temp_k = draw(dists.cooling_water_temp_k, u[0]);
    p.melt_temp_k = draw(dists.melt_temp_k, u[1]);
    p.flowrate_cm3_s = draw(dists.flowrate_cm3_s, u[2]);
    p.packing_pressure_bar = draw(dists.packing_pressure_bar, u[3]);
    p.power_law_n = draw(dists.power_law_n, u[4]);
    p.d1_pa_s = draw(dists.d1_pa_s, u[5]);
    p.validate();
    return p;
}

ProcessParams sample_params(const ParamDistributions& dists, Rng& rng) {
    std::array<double, 6> u;
    for (double& q : u) q = rng.uniform_open01();
    return sample_params(dists, u);
}

double cross_wlf_viscosity(double temp_k, double shear_rate_per_s, double power_law_n,
                           double d1_pa_s, const CrossWlfConstants& consts) {
    require(temp_k > consts.d2_ref_temp_k, "temperature must exceed the reference temperature");
    require(shear_rate_per_s >= 0.0, "shear rate must be non-negative");
    require(power_law_n > 0.0 && power_law_n <= 1.0, "power law index must lie in (0, 1]");
    require(d1_pa_s > 0.0, "D1 must be positive");

    const double dt = temp_k - consts.d2_ref_temp_k;
    const double eta0 = d1_pa_s * std::exp(-consts.a1 * dt / (consts.a2_k + dt));
    if (shear_rate_per_s == 0.0 || power_law_n == 1.0) return eta0;
    return eta0 / (1.0 + std::pow(eta0 * shear_rate_per_s / consts.tau_star_pa, 1.0 - power_law_n));
}

double cross_wlf_viscosity(double temp_k, double shear_rate_per_s, const ProcessParams& params,
                           const CrossWlfConstants& consts) {
    return cross_wlf_viscosity(temp_k, shear_rate_per_s, params.power_law_n, params.d1_pa_s, consts);
}

ShrinkageRefs derive_shrinkage_refs(const ParamDistributions& dists, const CrossWlfConstants& wlf,
                                    double shear_rate_ref_per_s) {
    dists.validate();
    ShrinkageRefs refs;
    refs.melt_ref_k = dists.melt_temp_k.median;
    refs.melt_sigma_k = dists.melt_temp_k.sigma();
    refs.pack_ref_bar = dists.packing_pressure_bar.median;
    refs.pack_sigma_bar = dists.packing_pressure_bar.sigma();
    refs.cool_ref_k = dists.cooling_water_temp_k.median;
    refs.cool_sigma_k = dists.cooling_water_temp_k.sigma();

    const double t0 = dists.melt_temp_k.median;
    const double n0 = dists.power_law_n.median;
    const double d10 = dists.d1_pa_s.median;
    const auto log_visc = [&](double t, double n, double d1) {
        return std::log(cross_wlf_viscosity(t, shear_rate_ref_per_s, n, d1, wlf));
    };
    refs.log_visc_ref = log_visc(t0, n0, d10);

    // Delta method: sigma of log viscosity from central-difference slopes
    // along each varied input, evaluated at the medians.
    const double st = dists.melt_temp_k.sigma();
    const double sn = dists.power_law_n.sigma();
    const double sd = dists.d1_pa_s.sigma();
    const double gt = (log_visc(t0 + st, n0, d10) - log_visc(t0 - st, n0, d10)) / 2.0;
    const double gn = (log_visc(t0, n0 + sn, d10) - log_visc(t0, n0 - sn, d10)) / 2.0;
    const double gd = (log_visc(t0, n0, d10 + sd) - log_visc(t0, n0, d10 - sd)) / 2.0;
    refs.log_visc_sigma = std::sqrt(gt * gt + gn * gn + gd * gd);
    return refs;
}

SimConfig default_sim_config(const ParamDistributions& dists) {
    SimConfig cfg;
    cfg.refs = derive_shrinkage_refs(dists, cfg.cross_wlf, cfg.series.shear_rate_ref_per_s);
    return cfg;
}

MouldingRun simulate_run(const ProcessParams& params, const SimConfig& cfg, int64_t run_id,
                         const NoiseDraws& noise) {
    params.validate();
    cfg.validate();
    require(params.flowrate_cm3_s > 0.0, "flowrate must be positive");

    const std::size_t n = cfg.sample_count();
    const double dt = 1.0 / cfg.sample_rate_hz;
    const SeriesShape& sh = cfg.series;

    const double t_fill = cfg.shot_volume_cm3 / params.flowrate_cm3_s;
    const double t_release = t_fill + sh.packing_duration_s;
    const double eta =
        cross_wlf_viscosity(params.melt_temp_k, sh.shear_rate_ref_per_s, params, cfg.cross_wlf);
    const double eta_ref = std::exp(cfg.refs.log_visc_ref);
    const double p_fill = sh.fill_pressure_coeff_bar * (eta / eta_ref) *
                          (params.flowrate_cm3_s / sh.flow_ref_cm3_s);
    const double p_pack = params.packing_pressure_bar;
    const double tau_release =
        std::max(0.5, sh.release_tau_base_s +
                          sh.release_tau_cool_slope_s_per_k *
                              (params.cooling_water_temp_k - cfg.refs.cool_ref_k) +
                          sh.release_tau_melt_slope_s_per_k *
                              (params.melt_temp_k - cfg.refs.melt_ref_k));
    const double cav_gain =
        sh.cavity_gain *
        (1.0 + sh.cavity_gain_melt_slope_per_k * (params.melt_temp_k - cfg.refs.melt_ref_k));
    const double stroke_mm = cfg.shot_volume_cm3 / sh.screw_area_cm2 * 10.0;
    const double creep_mm = sh.creep_depth_mm * (p_pack / cfg.refs.pack_ref_bar);

    MouldingRun run;
    run.run_id = run_id;
    run.params = params;
    run.injection_pressure_bar.resize(n);
    run.cavity_pressure_bar.resize(n);
    run.ram_position_mm.resize(n);

    const double p_release = p_pack + (p_fill - p_pack) * std::exp(-sh.packing_duration_s /
                                                                   sh.switchover_tau_s);
    const double cav_decay = std::exp(-dt / tau_release);
    double cav = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        double inj;
        double ram;
        if (t <= t_fill) {
            const double frac = t / t_fill;
            inj = p_fill * frac * std::sqrt(frac);
            ram = sh.ram_start_mm - stroke_mm * frac;
        } else if (t <= t_release) {
            inj = p_pack + (p_fill - p_pack) * std::exp(-(t - t_fill) / sh.switchover_tau_s);
            ram = sh.ram_start_mm - stroke_mm -
                  creep_mm * (1.0 - std::exp(-(t - t_fill) / sh.creep_tau_s));
        } else {
            inj = p_release * std::exp(-(t - t_release) / tau_release);
            ram = sh.ram_start_mm - stroke_mm -
                  creep_mm * (1.0 - std::exp(-(t_release - t_fill) / sh.creep_tau_s));
        }
        if (t <= t_release) {
            cav += (dt / sh.cavity_lag_tau_s) * (cav_gain * inj - cav);
        } else {
            cav *= cav_decay;
        }
        run.injection_pressure_bar[k] = inj;
        run.cavity_pressure_bar[k] = cav;
        run.ram_position_mm[k] = ram;
    }

    const double z_melt = (params.melt_temp_k - cfg.refs.melt_ref_k) / cfg.refs.melt_sigma_k;
    const double z_pack =
        (params.packing_pressure_bar - cfg.refs.pack_ref_bar) / cfg.refs.pack_sigma_bar;
    const double z_cool =
        (params.cooling_water_temp_k - cfg.refs.cool_ref_k) / cfg.refs.cool_sigma_k;
    const double z_visc = (std::log(eta) - cfg.refs.log_visc_ref) / cfg.refs.log_visc_sigma;
    const auto& c = cfg.shrinkage.coefficients;
    const double eps = noise.shrink_z * (cfg.noise_std_mm / cfg.nominal_opening_distance_mm);
    const double shrink =
        cfg.shrinkage.base + c[0] * z_melt + c[1] * z_pack + c[2] * z_cool + c[3] * z_visc + eps;
    run.opening_distance_mm = cfg.nominal_opening_distance_mm * (1.0 - shrink);
    require(std::isfinite(run.opening_distance_mm) && run.opening_distance_mm > 0.0,
            "opening distance must be finite and positive");
    return run;
}

std::pair<std::vector<int>, LabelingSummary> label_dataset(std::span<const double> distances,
                                                           double k) {
    if (distances.size() < 2)
        throw std::invalid_argument("labelling requires at least 2 opening distances");
    for (double d : distances)
        if (!std::isfinite(d)) throw std::invalid_argument("opening distances must be finite");
    require(k > 0.0, "sigma multiplier must be positive");

    LabelingSummary summary;
    summary.mu_mm = vec_mean(distances);
    summary.sigma_mm = vec_stddev(distances);
    summary.k = k;

    std::vector<int> labels(distances.size());
    const double bound = k * summary.sigma_mm;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        const int reject = std::abs(distances[i] - summary.mu_mm) > bound ? 1 : 0;
        labels[i] = reject;
        if (reject)
            ++summary.reject_count;
        else
            ++summary.accept_count;
    }
    return {std::move(labels), summary};
}

std::vector<MouldingRun> generate_dataset(const ParamDistributions& dists, const SimConfig& cfg,
                                          std::size_t n, uint64_t seed,
                                          LabelingSummary* summary_out) {
    if (n < 2) throw std::invalid_argument("a dataset needs at least 2 runs to be labelled");
    dists.validate();
    cfg.validate();

    std::vector<MouldingRun> runs(n);
    const uint64_t base = splitmix64(seed);
    parallel_for(n, [&](std::size_t i) {
        Rng rng(splitmix64(base ^ (static_cast<uint64_t>(i) + 1)));
        const ProcessParams params = sample_params(dists, rng);
        NoiseDraws noise;
        noise.shrink_z = rng.normal();
        runs[i] = simulate_run(params, cfg, static_cast<int64_t>(i), noise);
    });

    std::vector<double> distances(n);
    for (std::size_t i = 0; i < n; ++i) distances[i] = runs[i].opening_distance_mm;
    auto [labels, summary] = label_dataset(distances, cfg.label_sigma_multiplier);
    for (std::size_t i = 0; i < n; ++i) runs[i].label = labels[i];
    if (summary_out) *summary_out = summary;
    return runs;
}

}  // namespace moldqc
