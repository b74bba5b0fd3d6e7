#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tvrelax/grid.hpp"
#include "tvrelax/params.hpp"
#include "tvrelax/ssn.hpp"

namespace tvrelax {

/// Binary denoising of f: one solve of <1/2 - f, u> + beta*tv(u) followed
/// by recovery and thresholding. The optional report captures the inner
/// solve.
ScalarField denoise_binary(const ScalarField& f, const SolverParams& p,
                           SolveReport* report = nullptr);

struct SegmentationState {
    ScalarField u;  // binary phase indicator
    double c1 = 0.0;
    double c2 = 0.0;
    int outer_iters = 0;
    bool converged = false;
    bool empty_phase_flagged = false;
    std::vector<double> energy_history;  // two-phase objective per outer step
    SolveReport last_solve;
};

/// Two-phase piecewise-constant segmentation by alternating minimization:
/// solve for u with g = (c1-f)^2 - (c2-f)^2, threshold, update the region
/// averages c1 (u = 1) and c2 (u = 0), repeat until the l1 change of u
/// drops to outer_tol * |Omega| or outer_cap is reached. The default
/// initialization is u0 = 1 where f > 1/2. The dual variable is carried
/// across outer iterations. An empty phase keeps its previous constant
/// and sets the flag (at initialization it falls back to max f / min f).
/// Throws std::invalid_argument for a constant image.
SegmentationState chan_vese(const ScalarField& f, const SolverParams& p,
                            int outer_cap = 50, double outer_tol = 1e-4);
SegmentationState chan_vese(const ScalarField& f, const SolverParams& p,
                            const ScalarField& u0, int outer_cap = 50,
                            double outer_tol = 1e-4);

struct LabelState {
    std::size_t m = 0;                   // number of binary indicators
    std::vector<ScalarField> indicators; // m binary fields
    std::vector<double> constants;       // 2^m values; bit j of the code
                                         // is the phase bit of indicator j
    ScalarField piecewise_image;         // sum_b c_b * Z_b(u)
    int sweeps = 0;
    bool converged = false;
    std::vector<std::uint8_t> frozen_phases;  // 2^m flags: empty, kept constant
    bool empty_phase_flagged = false;
    std::vector<double> energy_history;  // labeling objective per sweep
    SolveReport last_solve;
};

/// Linearized data term for indicator i (0-based) with all others fixed:
///   g_i(x) = sum_{b: b_i=1} prod_{j != i} z_{b_j}(u_j(x)) (c_b - f(x))^2
///          - sum_{b: b_i=0} prod_{j != i} z_{b_j}(u_j(x)) (c_b - f(x))^2
/// with z_0(y) = 1 - y, z_1(y) = y. Throws std::invalid_argument when i
/// is out of range or grids mismatch.
ScalarField label_gradient(const LabelState& s, const ScalarField& f,
                           std::size_t i);

/// 2^m-phase labeling by Gauss-Seidel sweeps over the m indicators: each
/// u_i is re-solved with label_gradient at the current state and
/// thresholded immediately; the phase constants c_b are re-averaged after
/// every sweep (empty phases freeze their constant and are flagged).
/// Stops when the summed l1 change over one sweep drops to
/// outer_tol * |Omega| or at sweep_cap, in which case the lowest-energy
/// state seen is returned with converged = false. Default initialization
/// quantizes range-normalized f into 2^m level bins and uses the bin
/// index bits; for m = 1 on a two-level image whose levels straddle 1/2
/// this reproduces the segmentation initializer. Requires 1 <= m <= 8; throws
/// std::invalid_argument for a constant image.
LabelState multilabel(const ScalarField& f, const SolverParams& p,
                      std::size_t m, int sweep_cap = 30,
                      double outer_tol = 1e-4);
LabelState multilabel(const ScalarField& f, const SolverParams& p,
                      std::size_t m, const std::vector<ScalarField>& u0,
                      int sweep_cap = 30, double outer_tol = 1e-4);

}  // namespace tvrelax
