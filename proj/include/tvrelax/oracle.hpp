#pragma once

#include <cstdint>

#include "tvrelax/grid.hpp"

namespace tvrelax {

struct OracleResult {
    ScalarField u;
    double energy = 0.0;
};

/// Energy <g,u>*vol + beta*tv(u) of the binary field encoded by the bits
/// of `bits` (bit j = cell j in row-major order). Written independently
/// of the energy module so the two routes can check each other.
double oracle_binary_energy(const ScalarField& g, double beta,
                            std::uint64_t bits);

/// Exhaustive minimum of <g,u> + beta*tv(u) over all 2^n binary fields.
/// Requires n <= 20 cells. Configurations are scanned in increasing
/// binary-encoded order and only strict improvements are kept, so ties
/// resolve to the lowest index deterministically.
OracleResult brute_force_min(const ScalarField& g, double beta);

/// Same scan restricted to |integral(u) - target| <= vol_tol.
/// Throws solver_error when no configuration is feasible.
OracleResult brute_force_volume(const ScalarField& g, double beta,
                                double target, double vol_tol);

}  // namespace tvrelax
