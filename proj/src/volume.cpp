#include "tvrelax/volume.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "tvrelax/errors.hpp"
#include "tvrelax/recovery.hpp"
#include "tvrelax/ssn.hpp"

namespace tvrelax {

double volume_of(const ScalarField& u) {
    double s = 0.0;
    for (double v : u.values) s += v;
    return s * u.grid.cell_volume();
}

namespace {

struct Probe {
    ScalarField u;       // thresholded solution at lambda
    double lambda = 0.0;
    double volume = 0.0;
};

}  // namespace

VolumeResult solve_with_volume(const ScalarField& g, const SolverParams& p,
                               double target, double vol_tol,
                               double lambda_max) {
    p.validate();
    const double total = static_cast<double>(g.grid.cell_count()) *
                         g.grid.cell_volume();
    if (!(target > 0.0 && target < total))
        throw std::invalid_argument(
            "solve_with_volume: target must lie strictly between 0 and the "
            "domain volume");
    if (!(vol_tol >= 0.0))
        throw std::invalid_argument("solve_with_volume: vol_tol must be >= 0");
    if (!(lambda_max > 0.0))
        throw std::invalid_argument("solve_with_volume: lambda_max must be > 0");

    VectorField q = VectorField::zeros(g.grid);
    int evals = 0;
    // Shifting g by lambda penalizes (lambda > 0) or rewards (lambda < 0)
    // mass uniformly, so the thresholded volume is nonincreasing in lambda.
    const auto eval = [&](double lambda) -> Probe {
        ScalarField gs = g;
        for (double& v : gs.values) v += lambda;
        auto [qs, rep] = solve(gs, p, q);
        q = std::move(qs);
        ScalarField u = threshold(recover_u(q, gs, p), p.threshold_t);
        const double w = volume_of(u);
        ++evals;
        return {std::move(u), lambda, w};
    };

    const auto finish = [&](Probe pr, double lo, double hi, bool plateau) {
        VolumeResult r;
        r.u = std::move(pr.u);
        r.multiplier = pr.lambda;
        r.achieved_volume = pr.volume;
        r.bracket_lo = lo;
        r.bracket_hi = hi;
        r.evaluations = evals;
        r.plateau_limited = plateau;
        return r;
    };

    Probe at0 = eval(0.0);
    if (std::abs(at0.volume - target) <= vol_tol)
        return finish(std::move(at0), 0.0, 0.0, false);

    // Double away from zero until the volume response crosses the target.
    const bool shrink = at0.volume > target;  // need lambda > 0
    double prev = 0.0;
    double lo = 0.0, hi = 0.0;
    Probe feasible = std::move(at0);  // only meaningful once volume <= target
    bool bracketed = false;
    for (double step = 1e-3; !bracketed; step *= 2.0) {
        const double lambda = shrink ? step : -step;
        if (std::abs(lambda) > lambda_max)
            throw solver_error(
                "solve_with_volume: no bracket within the multiplier bound");
        Probe pr = eval(lambda);
        if (std::abs(pr.volume - target) <= vol_tol)
            return finish(std::move(pr), lambda, lambda, false);
        if (shrink) {
            if (pr.volume < target) {
                lo = prev;
                hi = lambda;
                feasible = std::move(pr);
                bracketed = true;
            } else {
                prev = lambda;
            }
        } else {
            if (pr.volume > target) {
                lo = lambda;
                hi = prev;
                bracketed = true;
            } else {
                prev = lambda;
                feasible = std::move(pr);
            }
        }
    }

    // Bisect keeping volume(lo) > target > volume(hi).
    while (hi - lo > 1e-8) {
        const double mid = 0.5 * (lo + hi);
        Probe pr = eval(mid);
        if (std::abs(pr.volume - target) <= vol_tol)
            return finish(std::move(pr), lo, hi, false);
        if (pr.volume > target) {
            lo = mid;
        } else {
            hi = mid;
            feasible = std::move(pr);
        }
    }
    return finish(std::move(feasible), lo, hi, true);
}

}  // namespace tvrelax
