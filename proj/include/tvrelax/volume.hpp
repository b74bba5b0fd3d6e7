#pragma once

#include "tvrelax/grid.hpp"
#include "tvrelax/params.hpp"

namespace tvrelax {

/// Integral of u: sum of values times the cell volume.
double volume_of(const ScalarField& u);

struct VolumeResult {
    ScalarField u;              // thresholded solution at the final multiplier
    double multiplier = 0.0;    // lambda of the returned u
    double achieved_volume = 0.0;
    double bracket_lo = 0.0;    // final bracket on lambda
    double bracket_hi = 0.0;
    int evaluations = 0;        // inner solves performed
    bool plateau_limited = false;  // volume map jumped across the target
};

/// Volume-constrained minimization of <g,u> + beta*tv(u) subject to
/// integral(u) = target, via the shifted problems g + lambda and the
/// monotone volume response W(lambda). Brackets lambda by doubling from
/// zero, then bisects until |W - target| <= vol_tol or the bracket is
/// narrower than 1e-8; if the response jumps across the target on a
/// plateau, the result carries the tight bracket and plateau_limited is
/// set, and the returned u is the feasible side with W <= target. Inner
/// solves are warm-started. Requires 0 < target < |Omega|; throws
/// solver_error if bracketing exceeds lambda_max.
VolumeResult solve_with_volume(const ScalarField& g, const SolverParams& p,
                               double target, double vol_tol,
                               double lambda_max = 1e6);

}  // namespace tvrelax
