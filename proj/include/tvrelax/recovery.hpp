#pragma once

#include "tvrelax/grid.hpp"
#include "tvrelax/params.hpp"

namespace tvrelax {

/// Primal candidate from a dual iterate, pointwise in w = div q - g:
///   u = (w + eps + 2c) / 2eps   if w < -eps - 2c
///   u = 0                       if w in [-eps - 2c, -eps]
///   u = (w + eps) / 2eps        if |w| < eps
///   u = 1                       if w in [eps, eps + 2c]
///   u = (w + eps - 2c) / 2eps   if w > eps + 2c
/// Continuous in w; values lie in [0,1] whenever w stays within
/// [-eps-2c, eps+2c], which holds at dual optima.
ScalarField recover_u(const VectorField& q, const ScalarField& g,
                      const SolverParams& p);

/// Binary cut: 1 where u > t, else 0. Requires t strictly inside (0,1).
ScalarField threshold(const ScalarField& u, double t);

/// Fraction of cells with min(|u|, |u-1|) <= tol.
double binary_fraction(const ScalarField& u, double tol = 1e-6);

}  // namespace tvrelax
