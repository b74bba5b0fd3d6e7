#pragma once

#include <cstdint>

#include "tvrelax/grid.hpp"

namespace tvrelax {

/// Adds seeded Gaussian noise with sigma = level * (max - min of clean)
/// and clamps the result to [0,1]. The normal stream is a fixed
/// Box-Muller transform over mt19937_64, so a given seed reproduces the
/// same bytes on every run. sigma_empirical, when given, receives the
/// sample standard deviation of the generated noise before clamping.
/// level = 0 returns the input unchanged.
ScalarField add_gaussian_noise(const ScalarField& clean, double level,
                               std::uint64_t seed,
                               double* sigma_empirical = nullptr);

}  // namespace tvrelax
