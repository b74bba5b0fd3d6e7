#pragma once

// Deterministic fixtures shared across the test binaries. Every generator
// takes an explicit engine so each test controls its own seed.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tvrelax/grid.hpp"

namespace testsupport {

using tvrelax::GridSpec;
using tvrelax::ScalarField;
using tvrelax::VectorField;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
    return lo + (hi - lo) * u;
}

inline ScalarField random_field(const GridSpec& g, std::mt19937_64& rng,
                                double lo = -1.0, double hi = 1.0) {
    ScalarField f = ScalarField::zeros(g);
    for (double& v : f.values) v = uniform(rng, lo, hi);
    return f;
}

inline VectorField random_vfield(const GridSpec& g, std::mt19937_64& rng,
                                 double lo = -1.0, double hi = 1.0) {
    VectorField p = VectorField::zeros(g);
    for (double& v : p.data) v = uniform(rng, lo, hi);
    return p;
}

// 1-d or 2-d grid with random extents and spacings.
inline GridSpec random_grid(std::mt19937_64& rng, std::size_t max_extent) {
    const bool two_d = (rng() & 1u) != 0;
    const auto extent = [&]() {
        return 2 + static_cast<std::size_t>(rng() % (max_extent - 1));
    };
    const auto h = [&]() { return uniform(rng, 0.3, 1.7); };
    if (two_d) return GridSpec({extent(), extent()}, {h(), h()});
    return GridSpec({extent()}, {h()});
}

// n-by-n image holding `inside` on a centered disk and `outside` elsewhere.
inline ScalarField disk_image(std::size_t n, double radius, double inside,
                              double outside) {
    ScalarField f = ScalarField::zeros(GridSpec({n, n}));
    const double c = 0.5 * static_cast<double>(n - 1);
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            const double dx = static_cast<double>(x) - c;
            const double dy = static_cast<double>(y) - c;
            f.values[y * n + x] =
                dx * dx + dy * dy <= radius * radius ? inside : outside;
        }
    return f;
}

// n-by-n image with constant quadrants (x-low/y-low, x-high/y-low, ...).
inline ScalarField quadrant_image(std::size_t n, double v00, double v10,
                                  double v01, double v11) {
    ScalarField f = ScalarField::zeros(GridSpec({n, n}));
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            const bool xhi = x >= n / 2;
            const bool yhi = y >= n / 2;
            f.values[y * n + x] = yhi ? (xhi ? v11 : v01) : (xhi ? v10 : v00);
        }
    return f;
}

// 1-d field linear from lo to hi across cell centers.
inline ScalarField ramp_1d(std::size_t n, double lo, double hi) {
    ScalarField f = ScalarField::zeros(GridSpec({n}));
    for (std::size_t i = 0; i < n; ++i)
        f.values[i] = lo + (hi - lo) * (static_cast<double>(i) + 0.5) /
                               static_cast<double>(n);
    return f;
}

}  // namespace testsupport
