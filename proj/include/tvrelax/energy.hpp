#pragma once

#include "tvrelax/grid.hpp"
#include "tvrelax/params.hpp"

namespace tvrelax {

/// Anisotropic discrete total variation: sum over cells of the l1 norm of
/// the forward-difference gradient, times the cell volume.
double tv(const ScalarField& u);

/// <g, u> * vol + beta * tv(u).
double primal_energy(const ScalarField& u, const ScalarField& g, double beta);

/// Primal energy plus the exact box penalty c * max(0, 2|u - 1/2| - 1) and
/// the quadratic terms (eps/2)(|u - 1|^2 + |u|^2), integrated over the grid.
double penalized_energy(const ScalarField& u, const ScalarField& g,
                        const SolverParams& p);

/// Dual objective in reporting form, evaluated at w = div q - g:
///   (gamma/2)||w||^2
///   + (1/4eps)[ ||min(w+eps+2c,0)||^2 + ||max(w+eps,0)||^2
///               + ||max(w-eps-2c,0)||^2 - ||max(w-eps,0)||^2 ]
///   - (eps/2)|Omega|
/// plus (div_weight/2)||P_div q||^2 when div_weight > 0. All norms are
/// vol-weighted sums. The box constraint |q| <= beta is assumed, not
/// enforced; with gamma > 0 or alpha-smoothing active the value is a
/// diagnostic, not a certified bound.
double dual_energy(const VectorField& q, const ScalarField& g,
                   const SolverParams& p);

/// The smoothed objective the Newton solver actually minimizes, in
/// plain-sum form: gamma and div_weight enter scaled by 2*eps, the clamp
/// terms carry weight 1/2, and the alpha terms
///   (1/2alpha) <(-Lap) q, q> + (alpha/2)||max(0,q-beta)||^2
///                            + (alpha/2)||min(0,q+beta)||^2
/// replace the box constraint. The solver residual is the exact gradient
/// of this function.
double smoothed_dual_energy(const VectorField& q, const ScalarField& g,
                            const SolverParams& p);

/// penalized_energy(u) + dual_energy(q); nonnegative at a primal-dual
/// optimal pair up to regularization and smoothing effects.
double duality_gap(const ScalarField& u, const VectorField& q,
                   const ScalarField& g, const SolverParams& p);

}  // namespace tvrelax
