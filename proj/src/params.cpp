#include "tvrelax/params.hpp"

#include <cmath>
#include <stdexcept>

namespace tvrelax {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

bool pos(double v) { return std::isfinite(v) && v > 0.0; }
bool nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void SolverParams::validate() const {
    require(pos(beta), "SolverParams: beta must be positive");
    require(pos(c), "SolverParams: c must be positive");
    require(pos(eps), "SolverParams: eps must be positive");
    require(nonneg(gamma), "SolverParams: gamma must be nonnegative");
    require(pos(alpha), "SolverParams: alpha must be positive");
    require(nonneg(div_weight), "SolverParams: div_weight must be nonnegative");
    require(std::isfinite(threshold_t) && threshold_t > 0.0 && threshold_t < 1.0,
            "SolverParams: threshold must lie strictly inside (0,1)");
    require(pos(newton_reduction), "SolverParams: newton_reduction must be positive");
    require(nonneg(newton_stall), "SolverParams: newton_stall must be nonnegative");
    require(newton_max_iters > 0, "SolverParams: newton_max_iters must be positive");
    require(pos(pcg_base_tol), "SolverParams: pcg_base_tol must be positive");
    require(pcg_max_iters > 0, "SolverParams: pcg_max_iters must be positive");
}

}  // namespace tvrelax
