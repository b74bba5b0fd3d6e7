#include "tvrelax/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvrelax {

ScalarField recover_u(const VectorField& q, const ScalarField& g,
                      const SolverParams& p) {
    if (!(q.grid == g.grid))
        throw std::invalid_argument("recover_u: grid mismatch");
    const std::size_t n = g.grid.cell_count();
    ScalarField u = ScalarField::zeros(g.grid);
    std::vector<double> w(n);
    div_into(g.grid, q.data, w);

    const double knot = p.eps + 2.0 * p.c;
    const double inv2eps = 0.5 / p.eps;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w[i] - g.values[i];
        double v;
        if (wi < -knot)
            v = (wi + knot) * inv2eps;  // q' < -beta side, u below 0
        else if (wi <= -p.eps)
            v = 0.0;
        else if (wi < p.eps)
            v = (wi + p.eps) * inv2eps;  // transition ramp across [0,1]
        else if (wi <= knot)
            v = 1.0;
        else
            v = (wi + p.eps - 2.0 * p.c) * inv2eps;  // u above 1
        u.values[i] = v;
    }
    return u;
}

ScalarField threshold(const ScalarField& u, double t) {
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("threshold: t must lie in (0,1)");
    ScalarField out = u;
    for (double& v : out.values) v = v > t ? 1.0 : 0.0;
    return out;
}

double binary_fraction(const ScalarField& u, double tol) {
    if (u.values.empty()) return 1.0;
    std::size_t hits = 0;
    for (double v : u.values) {
        const double dist = std::min(std::abs(v), std::abs(v - 1.0));
        if (dist <= tol) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(u.values.size());
}

}  // namespace tvrelax
