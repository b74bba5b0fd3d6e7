#include "tvrelax/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace tvrelax {

ScalarField add_gaussian_noise(const ScalarField& clean, double level,
                               std::uint64_t seed, double* sigma_empirical) {
    if (!(level >= 0.0) || !std::isfinite(level))
        throw std::invalid_argument("add_gaussian_noise: level must be >= 0");
    if (sigma_empirical) *sigma_empirical = 0.0;
    if (level == 0.0) return clean;

    double fmin = std::numeric_limits<double>::infinity();
    double fmax = -fmin;
    for (double v : clean.values) {
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
    }
    const double sigma = level * (fmax - fmin);

    // Hand-rolled Box-Muller on raw 53-bit draws: std::normal_distribution
    // is not specified bit-for-bit across standard libraries, this is.
    std::mt19937_64 rng(seed);
    const auto uniform = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1p-53;
    };

    ScalarField noisy = clean;
    const std::size_t n = noisy.values.size();
    double sumsq = 0.0;
    for (std::size_t i = 0; i < n; i += 2) {
        const double u1 = uniform() + 0x1p-53;  // keep log() away from 0
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        const double z0 = r * std::cos(a);
        const double z1 = r * std::sin(a);
        noisy.values[i] += sigma * z0;
        sumsq += sigma * z0 * (sigma * z0);
        if (i + 1 < n) {
            noisy.values[i + 1] += sigma * z1;
            sumsq += sigma * z1 * (sigma * z1);
        }
    }
    if (sigma_empirical)
        *sigma_empirical = std::sqrt(sumsq / static_cast<double>(n));
    for (double& v : noisy.values) v = std::clamp(v, 0.0, 1.0);
    return noisy;
}

}  // namespace tvrelax
