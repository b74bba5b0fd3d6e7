#pragma once

namespace tvrelax {

/// Parameters of the penalized relaxation and of the dual Newton solver.
///
/// beta is the total-variation weight of the problem being solved; c and
/// eps shape the exact box penalty; gamma and div_weight regularize the
/// dual; alpha controls the smoothing that makes the dual differentiable.
/// Defaults follow the reference configuration used throughout the test
/// suite: c = 100, eps = 1e-7, gamma = 0.1, alpha = 1e3.
struct SolverParams {
    double beta = 1e-3;
    double c = 100.0;
    double eps = 1e-7;
    double gamma = 0.1;
    double alpha = 1e3;
    double div_weight = 0.0;   // weight of the divergence-free projection term
    double threshold_t = 0.5;  // cut level for binary recovery

    double newton_reduction = 1e-8;  // stop once ||Q(q)|| <= reduction * ||Q(q0)||
    double newton_stall = 1e-8;      // stop once successive residuals differ less
    int newton_max_iters = 100;
    double pcg_base_tol = 1e-3;  // multiplier of the forcing sequence
    int pcg_max_iters = 500;

    enum class Precond { ldlt, jacobi };
    Precond precond = Precond::ldlt;

    /// Throws std::invalid_argument when any value is out of range
    /// (beta/c/eps/alpha positive, gamma/div_weight nonnegative,
    /// threshold strictly inside (0,1), tolerances positive, iteration
    /// caps positive).
    void validate() const;
};

}  // namespace tvrelax
