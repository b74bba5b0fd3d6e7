#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tvrelax/grid.hpp"
#include "tvrelax/params.hpp"

namespace tvrelax {

/// Pointwise activity pattern of the clamp and box terms. a1..a4 are
/// cell-wise on w = div q - g, a5/a6 component-wise on q. All sets use
/// strict inequalities, so a value sitting exactly on a breakpoint takes
/// generalized derivative zero.
struct ActiveSets {
    std::vector<std::uint8_t> a1;  // w < -eps - 2c
    std::vector<std::uint8_t> a2;  // w > -eps
    std::vector<std::uint8_t> a3;  // w >  eps + 2c
    std::vector<std::uint8_t> a4;  // w >  eps
    std::vector<std::uint8_t> a5;  // q >  beta
    std::vector<std::uint8_t> a6;  // q < -beta
};

ActiveSets active_sets(const VectorField& q, const ScalarField& g,
                       const SolverParams& p);

/// Gradient of the smoothed dual objective:
///   Q(q) = -grad[ 2eps*gamma*w + min(w+eps+2c,0) + max(w+eps,0)
///                 + max(w-eps-2c,0) - max(w-eps,0) ]
///          + 2eps*div_weight * P_div q + (1/alpha)(-Lap) q
///          + alpha*max(0,q-beta) + alpha*min(0,q+beta),   w = div q - g.
VectorField residual(const VectorField& q, const ScalarField& g,
                     const SolverParams& p);

/// Generalized Newton operator at the given activity pattern:
///   dq -> -grad[(2eps*gamma + a1 + a2 + a3 - a4) div dq]
///         + 2eps*div_weight * P_div dq + (1/alpha)(-Lap) dq
///         + alpha*(a5 + a6) dq.
/// Symmetric, and positive definite for patterns consistent with some
/// (q, g) because the clamp coefficient is then 0 or 1 and the Laplacian
/// block is definite.
VectorField newton_apply(const ActiveSets& s, const VectorField& dq,
                         const SolverParams& p);

/// L2-orthogonal projection onto discretely divergence-free fields:
/// returns q - grad(phi) where div grad phi = div q is solved by CG to
/// the given relative tolerance (the system is compatible because
/// divergence fields have zero mean).
VectorField p_div_apply(const VectorField& q, double tol = 1e-12);

using LinearOp = std::function<void(std::span<const double>, std::span<double>)>;

struct PcgResult {
    std::vector<double> x;
    int iterations = 0;
};

/// Preconditioned conjugate gradients from a zero start. Stops when
/// ||rhs - A x|| <= tol * ||rhs|| (recurrence residual) or at max_iters.
/// Throws solver_error on a nonpositive-curvature direction, which
/// indicates the operator is not positive definite (a masking bug).
PcgResult pcg(const LinearOp& apply, std::span<const double> rhs,
              const LinearOp& precond_solve, double tol, int max_iters);

enum class StopReason { reduction, stall, max_iters };

std::string to_string(StopReason r);

struct SolveReport {
    std::vector<double> residual_history;  // ||Q(q_k)||, k = 0..iters
    int newton_iters = 0;                  // == residual_history.size() - 1
    std::vector<int> pcg_iters;            // inner iterations per Newton step
    bool converged = false;
    StopReason reason = StopReason::max_iters;
    double final_gap = 0.0;       // duality gap of the recovered primal pair
    double binary_fraction = 0.0; // share of recovered u within 1e-6 of {0,1}
    double wall_time_s = 0.0;
};

/// Semismooth Newton iteration on Q(q) = 0 with full steps. Inner
/// systems are solved by PCG with forcing tolerance
///   pcg_base_tol * min((res_k/res_0)^(3/2), res_k/res_0)
/// and the preconditioner (1/alpha)(-Lap) + alpha*(a5 + a6). Termination:
/// residual reduction below newton_reduction * res_0, successive-residual
/// stall below newton_stall, or newton_max_iters (converged = false).
/// Deterministic: identical inputs give bitwise-identical q and report
/// (wall_time_s excepted).
std::pair<VectorField, SolveReport> solve(const ScalarField& g,
                                          const SolverParams& p);
std::pair<VectorField, SolveReport> solve(const ScalarField& g,
                                          const SolverParams& p,
                                          const VectorField& q0);

}  // namespace tvrelax
