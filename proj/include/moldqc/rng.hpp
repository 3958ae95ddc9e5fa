#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace moldqc {

uint64_t splitmix64(uint64_t x);
uint64_t fnv1a64(std::string_view s);

/// Seed for one pipeline stage, derived from the global seed so that
/// stages draw from unrelated streams.
inline uint64_t stage_seed(uint64_t global_seed, std::string_view stage) {
    return splitmix64(global_seed ^ fnv1a64(stage));
}

/// Quantile function of the standard normal distribution
/// (Wichura's PPND16 rational approximations, |rel err| < 1e-15).
double inverse_normal_cdf(double p);

/// mt19937_64 wrapped with hand-rolled deviates. The standard library
/// distributions are implementation-defined, so every stream here is
/// produced from raw engine words only; outputs are identical on any
/// conforming platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on the open interval (0, 1); safe as a quantile argument.
    double uniform_open01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return inverse_normal_cdf(uniform_open01()); }

    /// Unbiased integer in [0, n). Rejection sampling on a power-of-two mask.
    uint64_t below(uint64_t n);

    /// Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace moldqc
