#include "moldqc/tsfeat.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "moldqc/common.hpp"
#include "moldqc/parallel.hpp"

namespace moldqc {

namespace {

constexpr int kFftCoefficients = 64;

/// Shared per-series intermediates so evaluators stay O(n) or better.
struct SeriesContext {
    std::span<const double> x;
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;  // central moments, denominator n
    double stddev = 0.0;
    double minimum = 0.0, maximum = 0.0;
    std::vector<double> sorted;
    std::array<double, kFftCoefficients> dft_re{}, dft_im{};
};

SeriesContext make_context(std::span<const double> x) {
    SeriesContext c;
    c.x = x;
    c.n = x.size();
    double s = 0.0;
    for (double v : x) s += v;
    c.mean = s / static_cast<double>(c.n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - c.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double inv_n = 1.0 / static_cast<double>(c.n);
    c.m2 = m2 * inv_n;
    c.m3 = m3 * inv_n;
    c.m4 = m4 * inv_n;
    c.stddev = std::sqrt(c.m2);
    c.sorted.assign(x.begin(), x.end());
    std::sort(c.sorted.begin(), c.sorted.end());
    c.minimum = c.sorted.front();
    c.maximum = c.sorted.back();

    const int kmax = static_cast<int>(std::min<std::size_t>(kFftCoefficients, c.n));
    for (int k = 0; k < kmax; ++k) {
        const double theta = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(c.n);
        const double wr = std::cos(theta), wi = std::sin(theta);
        double cr = 1.0, ci = 0.0;
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < c.n; ++t) {
            re += x[t] * cr;
            im += x[t] * ci;
            const double nr = cr * wr - ci * wi;
            ci = cr * wi + ci * wr;
            cr = nr;
        }
        c.dft_re[k] = re;
        c.dft_im[k] = im;
    }
    for (int k = kmax; k < kFftCoefficients; ++k) {
        c.dft_re[k] = kNaN;
        c.dft_im[k] = kNaN;
    }
    return c;
}

/// Order statistic with linear interpolation between ranks.
double quantile_sorted(const std::vector<double>& s, double q) {
    const double h = q * static_cast<double>(s.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= s.size()) return s.back();
    return s[lo] + frac * (s[lo + 1] - s[lo]);
}

double autocorrelation(const SeriesContext& c, int lag) {
    if (c.m2 == 0.0) return kNaN;
    if (lag <= 0 || static_cast<std::size_t>(lag) >= c.n) return kNaN;
    double s = 0.0;
    for (std::size_t i = 0; i + lag < c.n; ++i)
        s += (c.x[i] - c.mean) * (c.x[i + lag] - c.mean);
    return (s / static_cast<double>(c.n)) / c.m2;
}

double c3_statistic(const SeriesContext& c, int lag) {
    const std::size_t span = 2 * static_cast<std::size_t>(lag);
    if (c.n <= span) return kNaN;
    double s = 0.0;
    for (std::size_t i = 0; i + span < c.n; ++i) s += c.x[i + span] * c.x[i + lag] * c.x[i];
    return s / static_cast<double>(c.n - span);
}

double time_reversal_asymmetry(const SeriesContext& c, int lag) {
    const std::size_t span = 2 * static_cast<std::size_t>(lag);
    if (c.n <= span) return kNaN;
    double s = 0.0;
    for (std::size_t i = 0; i + span < c.n; ++i) {
        const double a = c.x[i + span], b = c.x[i + lag], d = c.x[i];
        s += a * a * b - b * d * d;
    }
    return s / static_cast<double>(c.n - span);
}

double cid_ce(const SeriesContext& c, bool normalize) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < c.n; ++i) {
        const double d = c.x[i + 1] - c.x[i];
        s += d * d;
    }
    const double raw = std::sqrt(s);
    if (!normalize) return raw;
    return c.stddev == 0.0 ? kNaN : raw / c.stddev;
}

double binned_entropy(const SeriesContext& c, int bins) {
    const double width = c.maximum - c.minimum;
    if (width == 0.0) return 0.0;
    std::vector<int64_t> counts(static_cast<std::size_t>(bins), 0);
    for (double v : c.x) {
        auto b = static_cast<std::size_t>((v - c.minimum) / width * bins);
        if (b >= counts.size()) b = counts.size() - 1;
        ++counts[b];
    }
    double h = 0.0;
    for (int64_t cnt : counts) {
        if (cnt == 0) continue;
        const double p = static_cast<double>(cnt) / static_cast<double>(c.n);
        h -= p * std::log(p);
    }
    return h;
}

/// Pincus approximate entropy with self-matching counts; Chebyshev
/// distance, tolerance r = r_frac * stddev. The length-m and length-m+1
/// template counts are accumulated in one fused quadratic pass.
double approximate_entropy_m2(const SeriesContext& c, double r_frac) {
    const std::size_t n = c.n;
    if (n < 4) return kNaN;
    const double r = r_frac * c.stddev;
    if (!(r > 0.0)) return kNaN;

    const std::size_t nm = n - 1;   // length-2 templates
    const std::size_t nm1 = n - 2;  // length-3 templates
    std::vector<int32_t> c2(nm, 1), c3(nm1, 1);
    const double* v = c.x.data();
    for (std::size_t i = 0; i < nm1; ++i) {
        const double xi0 = v[i], xi1 = v[i + 1], xi2 = v[i + 2];
        int32_t acc2 = 0, acc3 = 0;
        int32_t* c2p = c2.data();
        int32_t* c3p = c3.data();
        for (std::size_t j = i + 1; j < nm1; ++j) {
            const int32_t ok2 = static_cast<int32_t>(std::fabs(xi0 - v[j]) <= r) &
                                static_cast<int32_t>(std::fabs(xi1 - v[j + 1]) <= r);
            const int32_t ok3 = ok2 & static_cast<int32_t>(std::fabs(xi2 - v[j + 2]) <= r);
            acc2 += ok2;
            c2p[j] += ok2;
            acc3 += ok3;
            c3p[j] += ok3;
        }
        {
            const std::size_t j = nm - 1;
            const int32_t ok2 = static_cast<int32_t>(std::fabs(xi0 - v[j]) <= r) &
                                static_cast<int32_t>(std::fabs(xi1 - v[j + 1]) <= r);
            acc2 += ok2;
            c2p[j] += ok2;
        }
        c2[i] += acc2;
        c3[i] += acc3;
    }

    double phi2 = 0.0, phi3 = 0.0;
    for (std::size_t i = 0; i < nm; ++i)
        phi2 += std::log(static_cast<double>(c2[i]) / static_cast<double>(nm));
    phi2 /= static_cast<double>(nm);
    for (std::size_t i = 0; i < nm1; ++i)
        phi3 += std::log(static_cast<double>(c3[i]) / static_cast<double>(nm1));
    phi3 /= static_cast<double>(nm1);
    return phi2 - phi3;
}

int64_t longest_strike(const SeriesContext& c, bool above) {
    int64_t best = 0, cur = 0;
    for (double v : c.x) {
        const bool hit = above ? v > c.mean : v < c.mean;
        cur = hit ? cur + 1 : 0;
        best = std::max(best, cur);
    }
    return best;
}

int64_t number_peaks(const SeriesContext& c, int support) {
    const auto s = static_cast<std::size_t>(support);
    if (c.n < 2 * s + 1) return 0;
    int64_t peaks = 0;
    for (std::size_t i = s; i + s < c.n; ++i) {
        bool is_peak = true;
        for (std::size_t k = 1; k <= s && is_peak; ++k)
            is_peak = c.x[i] > c.x[i - k] && c.x[i] > c.x[i + k];
        peaks += is_peak ? 1 : 0;
    }
    return peaks;
}

double index_mass_quantile(const SeriesContext& c, double q) {
    double total = 0.0;
    for (double v : c.x) total += std::fabs(v);
    if (total == 0.0) return kNaN;
    const double target = q * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < c.n; ++i) {
        cum += std::fabs(c.x[i]);
        if (cum >= target) return static_cast<double>(i + 1) / static_cast<double>(c.n);
    }
    return 1.0;
}

struct TrendFit {
    double slope = kNaN, intercept = kNaN, correlation = kNaN, stderr_slope = kNaN;
};

TrendFit linear_trend(std::span<const double> y) {
    TrendFit f;
    const std::size_t n = y.size();
    if (n < 2) return f;
    const double tbar = static_cast<double>(n - 1) / 2.0;
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(n);
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i) - tbar;
        const double dy = y[i] - ybar;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    f.slope = sty / stt;
    f.intercept = ybar - f.slope * tbar;
    f.correlation = syy == 0.0 ? kNaN : sty / std::sqrt(stt * syy);
    if (n >= 3) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double res = y[i] - (f.intercept + f.slope * static_cast<double>(i));
            rss += res * res;
        }
        f.stderr_slope = std::sqrt(rss / static_cast<double>(n - 2) / stt);
    }
    return f;
}

TrendFit chunked_trend(const SeriesContext& c, int chunks) {
    const auto m = static_cast<std::size_t>(chunks);
    TrendFit f;
    if (c.n < m) return f;
    std::vector<double> means(m);
    const std::size_t base = c.n / m, rem = c.n % m;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t len = base + (k < rem ? 1 : 0);
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += c.x[pos + i];
        means[k] = s / static_cast<double>(len);
        pos += len;
    }
    return linear_trend(means);
}

double fft_aggregated(const SeriesContext& c, const std::string& kind) {
    const int kmax = static_cast<int>(std::min<std::size_t>(kFftCoefficients, c.n));
    double total = 0.0;
    for (int k = 0; k < kmax; ++k)
        total += std::hypot(c.dft_re[k], c.dft_im[k]);
    if (total == 0.0) return kNaN;
    double centroid = 0.0;
    for (int k = 0; k < kmax; ++k)
        centroid += static_cast<double>(k) * std::hypot(c.dft_re[k], c.dft_im[k]);
    centroid /= total;
    if (kind == "centroid") return centroid;
    double var = 0.0, m3 = 0.0, m4 = 0.0;
    for (int k = 0; k < kmax; ++k) {
        const double w = std::hypot(c.dft_re[k], c.dft_im[k]) / total;
        const double d = static_cast<double>(k) - centroid;
        var += w * d * d;
        m3 += w * d * d * d;
        m4 += w * d * d * d * d;
    }
    if (kind == "variance") return var;
    if (var == 0.0) return kNaN;
    if (kind == "skew") return m3 / std::pow(var, 1.5);
    return m4 / (var * var);  // kurtosis
}

using Evaluator = std::function<double(const SeriesContext&)>;

std::string param_str(const FeatureDescriptor& d, const char* key) {
    for (const auto& [k, v] : d.params)
        if (k == key) return v;
    throw std::invalid_argument("feature " + d.name + ": missing parameter " + key);
}

int param_int(const FeatureDescriptor& d, const char* key) {
    const std::string v = param_str(d, key);
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{}) throw std::invalid_argument("feature parameter not an integer: " + v);
    return out;
}

double param_double(const FeatureDescriptor& d, const char* key) {
    return std::stod(param_str(d, key));
}

Evaluator compile_entry(const FeatureDescriptor& d) {
    const std::string& name = d.name;
    if (name == "mean") return [](const SeriesContext& c) { return c.mean; };
    if (name == "variance") return [](const SeriesContext& c) { return c.m2; };
    if (name == "standard_deviation") return [](const SeriesContext& c) { return c.stddev; };
    if (name == "skewness")
        return [](const SeriesContext& c) {
            return c.m2 == 0.0 ? kNaN : c.m3 / std::pow(c.m2, 1.5);
        };
    if (name == "kurtosis")
        return [](const SeriesContext& c) {
            return c.m2 == 0.0 ? kNaN : c.m4 / (c.m2 * c.m2) - 3.0;
        };
    if (name == "minimum") return [](const SeriesContext& c) { return c.minimum; };
    if (name == "maximum") return [](const SeriesContext& c) { return c.maximum; };
    if (name == "median") return [](const SeriesContext& c) { return quantile_sorted(c.sorted, 0.5); };
    if (name == "quantile") {
        const double q = param_double(d, "q");
        return [q](const SeriesContext& c) { return quantile_sorted(c.sorted, q); };
    }
    if (name == "abs_energy")
        return [](const SeriesContext& c) {
            double s = 0.0;
            for (double v : c.x) s += v * v;
            return s;
        };
    if (name == "sum_values")
        return [](const SeriesContext& c) { return c.mean * static_cast<double>(c.n); };
    if (name == "root_mean_square")
        return [](const SeriesContext& c) {
            double s = 0.0;
            for (double v : c.x) s += v * v;
            return std::sqrt(s / static_cast<double>(c.n));
        };
    if (name == "mean_abs_deviation")
        return [](const SeriesContext& c) {
            double s = 0.0;
            for (double v : c.x) s += std::fabs(v - c.mean);
            return s / static_cast<double>(c.n);
        };
    if (name == "value_range")
        return [](const SeriesContext& c) { return c.maximum - c.minimum; };
    if (name == "first_location_of_maximum")
        return [](const SeriesContext& c) {
            const auto it = std::find(c.x.begin(), c.x.end(), c.maximum);
            return static_cast<double>(it - c.x.begin()) / static_cast<double>(c.n);
        };
    if (name == "last_location_of_maximum")
        return [](const SeriesContext& c) {
            for (std::size_t i = c.n; i > 0; --i)
                if (c.x[i - 1] == c.maximum) return static_cast<double>(i) / static_cast<double>(c.n);
            return 1.0;
        };
    if (name == "first_location_of_minimum")
        return [](const SeriesContext& c) {
            const auto it = std::find(c.x.begin(), c.x.end(), c.minimum);
            return static_cast<double>(it - c.x.begin()) / static_cast<double>(c.n);
        };
    if (name == "last_location_of_minimum")
        return [](const SeriesContext& c) {
            for (std::size_t i = c.n; i > 0; --i)
                if (c.x[i - 1] == c.minimum) return static_cast<double>(i) / static_cast<double>(c.n);
            return 1.0;
        };
    if (name == "mean_change")
        return [](const SeriesContext& c) {
            return (c.x[c.n - 1] - c.x[0]) / static_cast<double>(c.n - 1);
        };
    if (name == "mean_abs_change")
        return [](const SeriesContext& c) {
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < c.n; ++i) s += std::fabs(c.x[i + 1] - c.x[i]);
            return s / static_cast<double>(c.n - 1);
        };
    if (name == "abs_sum_of_changes")
        return [](const SeriesContext& c) {
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < c.n; ++i) s += std::fabs(c.x[i + 1] - c.x[i]);
            return s;
        };
    if (name == "mean_second_derivative_central")
        return [](const SeriesContext& c) {
            if (c.n < 3) return kNaN;
            double s = 0.0;
            for (std::size_t i = 0; i + 2 < c.n; ++i) s += c.x[i + 2] - 2.0 * c.x[i + 1] + c.x[i];
            return s / (2.0 * static_cast<double>(c.n - 2));
        };
    if (name == "autocorrelation") {
        const int lag = param_int(d, "lag");
        return [lag](const SeriesContext& c) { return autocorrelation(c, lag); };
    }
    if (name == "c3") {
        const int lag = param_int(d, "lag");
        return [lag](const SeriesContext& c) { return c3_statistic(c, lag); };
    }
    if (name == "time_reversal_asymmetry_statistic") {
        const int lag = param_int(d, "lag");
        return [lag](const SeriesContext& c) { return time_reversal_asymmetry(c, lag); };
    }
    if (name == "cid_ce") {
        const bool normalize = param_str(d, "normalize") == "true";
        return [normalize](const SeriesContext& c) { return cid_ce(c, normalize); };
    }
    if (name == "binned_entropy") {
        const int bins = param_int(d, "bins");
        return [bins](const SeriesContext& c) { return binned_entropy(c, bins); };
    }
    if (name == "approximate_entropy") {
        const int m = param_int(d, "m");
        if (m != 2) throw std::invalid_argument("approximate_entropy supports m=2 only");
        const double r = param_double(d, "r");
        return [r](const SeriesContext& c) { return approximate_entropy_m2(c, r); };
    }
    if (name == "count_above_mean")
        return [](const SeriesContext& c) {
            int64_t k = 0;
            for (double v : c.x) k += v > c.mean ? 1 : 0;
            return static_cast<double>(k);
        };
    if (name == "count_below_mean")
        return [](const SeriesContext& c) {
            int64_t k = 0;
            for (double v : c.x) k += v < c.mean ? 1 : 0;
            return static_cast<double>(k);
        };
    if (name == "longest_strike_above_mean")
        return [](const SeriesContext& c) { return static_cast<double>(longest_strike(c, true)); };
    if (name == "longest_strike_below_mean")
        return [](const SeriesContext& c) { return static_cast<double>(longest_strike(c, false)); };
    if (name == "number_crossing_mean")
        return [](const SeriesContext& c) {
            int64_t k = 0;
            for (std::size_t i = 0; i + 1 < c.n; ++i)
                k += (c.x[i] - c.mean) * (c.x[i + 1] - c.mean) < 0.0 ? 1 : 0;
            return static_cast<double>(k);
        };
    if (name == "number_peaks") {
        const int support = param_int(d, "support");
        return [support](const SeriesContext& c) {
            return static_cast<double>(number_peaks(c, support));
        };
    }
    if (name == "ratio_beyond_r_sigma") {
        const double r = param_double(d, "r");
        return [r](const SeriesContext& c) {
            int64_t k = 0;
            const double bound = r * c.stddev;
            for (double v : c.x) k += std::fabs(v - c.mean) > bound ? 1 : 0;
            return static_cast<double>(k) / static_cast<double>(c.n);
        };
    }
    if (name == "index_mass_quantile") {
        const double q = param_double(d, "q");
        return [q](const SeriesContext& c) { return index_mass_quantile(c, q); };
    }
    if (name == "linear_trend") {
        const std::string attr = param_str(d, "attr");
        return [attr](const SeriesContext& c) {
            const TrendFit f = linear_trend(std::span<const double>(c.x));
            if (attr == "slope") return f.slope;
            if (attr == "intercept") return f.intercept;
            if (attr == "correlation") return f.correlation;
            return f.stderr_slope;
        };
    }
    if (name == "agg_linear_trend") {
        const int chunks = param_int(d, "chunks");
        const std::string attr = param_str(d, "attr");
        return [chunks, attr](const SeriesContext& c) {
            const TrendFit f = chunked_trend(c, chunks);
            return attr == "slope" ? f.slope : f.intercept;
        };
    }
    if (name == "fft_coefficient") {
        const std::string attr = param_str(d, "attr");
        const int k = param_int(d, "coeff");
        return [attr, k](const SeriesContext& c) {
            const double re = c.dft_re[k], im = c.dft_im[k];
            if (std::isnan(re)) return kNaN;
            if (attr == "real") return re;
            if (attr == "imag") return im;
            if (attr == "abs") return std::hypot(re, im);
            return std::atan2(im, re);  // angle
        };
    }
    if (name == "fft_aggregated") {
        const std::string kind = param_str(d, "aggtype");
        return [kind](const SeriesContext& c) { return fft_aggregated(c, kind); };
    }
    throw std::invalid_argument("unknown feature extractor: " + name);
}

std::vector<Evaluator> compile_catalog(const FeatureCatalog& catalog) {
    std::vector<Evaluator> out;
    out.reserve(catalog.entries.size());
    for (const auto& e : catalog.entries) out.push_back(compile_entry(e));
    return out;
}

void validate_series(std::span<const double> series) {
    if (series.size() < 2) throw std::invalid_argument("series must contain at least 2 samples");
    for (double v : series)
        if (!std::isfinite(v)) throw std::invalid_argument("series values must be finite");
}

}  // namespace

std::string FeatureDescriptor::label() const {
    std::string out = name;
    for (const auto& [k, v] : params) {
        out += "__";
        out += k;
        out += '_';
        out += v;
    }
    return out;
}

FeatureCatalog default_catalog() {
    FeatureCatalog cat;
    auto add = [&cat](std::string name,
                      std::vector<std::pair<std::string, std::string>> params = {}) {
        cat.entries.push_back({std::move(name), std::move(params)});
    };

    add("mean");
    add("variance");
    add("standard_deviation");
    add("skewness");
    add("kurtosis");
    add("minimum");
    add("maximum");
    add("median");
    for (const char* q : {"0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"})
        add("quantile", {{"q", q}});
    add("abs_energy");
    add("sum_values");
    add("root_mean_square");
    add("mean_abs_deviation");
    add("value_range");
    add("first_location_of_maximum");
    add("last_location_of_maximum");
    add("first_location_of_minimum");
    add("last_location_of_minimum");
    add("mean_change");
    add("mean_abs_change");
    add("abs_sum_of_changes");
    add("mean_second_derivative_central");
    for (int lag = 1; lag <= 20; ++lag) add("autocorrelation", {{"lag", std::to_string(lag)}});
    for (int lag = 1; lag <= 3; ++lag) add("c3", {{"lag", std::to_string(lag)}});
    for (int lag = 1; lag <= 3; ++lag)
        add("time_reversal_asymmetry_statistic", {{"lag", std::to_string(lag)}});
    add("cid_ce", {{"normalize", "false"}});
    add("cid_ce", {{"normalize", "true"}});
    for (const char* bins : {"5", "10", "20"}) add("binned_entropy", {{"bins", bins}});
    add("approximate_entropy", {{"m", "2"}, {"r", "0.2"}});
    add("count_above_mean");
    add("count_below_mean");
    add("longest_strike_above_mean");
    add("longest_strike_below_mean");
    add("number_crossing_mean");
    for (const char* s : {"1", "3", "5", "10"}) add("number_peaks", {{"support", s}});
    for (const char* r : {"0.5", "1", "1.5", "2", "2.5", "3"})
        add("ratio_beyond_r_sigma", {{"r", r}});
    for (const char* q : {"0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"})
        add("index_mass_quantile", {{"q", q}});
    for (const char* attr : {"slope", "intercept", "correlation", "stderr"})
        add("linear_trend", {{"attr", attr}});
    for (const char* chunks : {"5", "10", "50"})
        for (const char* attr : {"slope", "intercept"})
            add("agg_linear_trend", {{"chunks", chunks}, {"attr", attr}});
    for (const char* attr : {"real", "imag", "abs", "angle"})
        for (int k = 0; k < kFftCoefficients; ++k)
            add("fft_coefficient", {{"attr", attr}, {"coeff", std::to_string(k)}});
    for (const char* agg : {"centroid", "variance", "skew", "kurtosis"})
        add("fft_aggregated", {{"aggtype", agg}});
    return cat;
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
    return out;
}

std::vector<double> extract_series_features(std::span<const double> series,
                                            const FeatureCatalog& catalog) {
    validate_series(series);
    const auto evaluators = compile_catalog(catalog);
    const SeriesContext ctx = make_context(series);
    std::vector<double> out(evaluators.size());
    for (std::size_t i = 0; i < evaluators.size(); ++i) out[i] = evaluators[i](ctx);
    return out;
}

FeatureMatrix extract_matrix(std::span<const MouldingRun> runs, const FeatureCatalog& catalog) {
    for (const auto& run : runs) {
        if (run.injection_pressure_bar.size() != run.cavity_pressure_bar.size() ||
            run.injection_pressure_bar.size() != run.ram_position_mm.size())
            throw std::invalid_argument("run " + std::to_string(run.run_id) +
                                        ": series lengths differ");
    }

    FeatureMatrix m;
    m.column_names.reserve(3 * catalog.size());
    for (const char* series : kSeriesNames)
        for (const auto& e : catalog.entries)
            m.column_names.push_back(std::string(series) + "__" + e.label());
    m.run_ids.resize(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) m.run_ids[i] = runs[i].run_id;
    m.values.resize(runs.size() * m.column_names.size());

    const auto evaluators = compile_catalog(catalog);
    const std::size_t f = evaluators.size();
    parallel_for(runs.size(), [&](std::size_t r) {
        const MouldingRun& run = runs[r];
        const std::span<const double> series[3] = {run.injection_pressure_bar,
                                                   run.cavity_pressure_bar, run.ram_position_mm};
        double* row = m.values.data() + r * 3 * f;
        for (int s = 0; s < 3; ++s) {
            validate_series(series[s]);
            const SeriesContext ctx = make_context(series[s]);
            for (std::size_t i = 0; i < f; ++i) row[s * f + i] = evaluators[i](ctx);
        }
    });
    return m;
}

}  // namespace moldqc
