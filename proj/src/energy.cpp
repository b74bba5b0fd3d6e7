#include "tvrelax/energy.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tvrelax/ssn.hpp"

namespace tvrelax {

namespace {

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
    if (!(a == b)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

// Clamp-term sum of the dual integrand, evaluated branch-exact to avoid
// cancellation between the nearly equal max terms:
//   s(w) = min(w+eps+2c,0)^2 + max(w+eps,0)^2 + max(w-eps-2c,0)^2 - max(w-eps,0)^2
double clamp_quad(double w, double eps, double c) {
    if (w < -eps - 2.0 * c) {
        const double t = w + eps + 2.0 * c;
        return t * t;
    }
    if (w <= -eps) return 0.0;
    if (w < eps) {
        const double t = w + eps;
        return t * t;
    }
    if (w <= eps + 2.0 * c) return 4.0 * eps * w;
    const double t = w - eps - 2.0 * c;
    return t * t + 4.0 * eps * w;
}

}  // namespace

double tv(const ScalarField& u) {
    const GridSpec& g = u.grid;
    const std::size_t n = g.cell_count();
    double total = 0.0;
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const std::size_t s = g.stride(a);
        const std::size_t e = g.extent(a);
        const double w = g.cell_volume() / g.spacing(a);
        double axis_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t coord = (i / s) % e;
            if (coord + 1 < e) axis_sum += std::abs(u.values[i + s] - u.values[i]);
        }
        total += w * axis_sum;
    }
    return total;
}

double primal_energy(const ScalarField& u, const ScalarField& g, double beta) {
    require_same_grid(u.grid, g.grid, "primal_energy");
    double data = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
        data += g.values[i] * u.values[i];
    return data * u.grid.cell_volume() + beta * tv(u);
}

double penalized_energy(const ScalarField& u, const ScalarField& g,
                        const SolverParams& p) {
    require_same_grid(u.grid, g.grid, "penalized_energy");
    double pen = 0.0;
    for (double v : u.values) {
        const double box = 2.0 * std::abs(v - 0.5) - 1.0;
        if (box > 0.0) pen += p.c * box;
        pen += 0.5 * p.eps * ((v - 1.0) * (v - 1.0) + v * v);
    }
    return primal_energy(u, g, p.beta) + pen * u.grid.cell_volume();
}

double dual_energy(const VectorField& q, const ScalarField& g,
                   const SolverParams& p) {
    require_same_grid(q.grid, g.grid, "dual_energy");
    const std::size_t n = g.grid.cell_count();
    const double vol = g.grid.cell_volume();

    std::vector<double> w(n);
    div_into(q.grid, q.data, w);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w[i] - g.values[i];
        sum += 0.5 * p.gamma * wi * wi + clamp_quad(wi, p.eps, p.c) / (4.0 * p.eps);
    }
    double e = sum * vol - 0.5 * p.eps * static_cast<double>(n) * vol;

    if (p.div_weight > 0.0) {
        const VectorField pd = p_div_apply(q);
        e += 0.5 * p.div_weight * dot(pd.data, pd.data) * vol;
    }
    return e;
}

double smoothed_dual_energy(const VectorField& q, const ScalarField& g,
                            const SolverParams& p) {
    require_same_grid(q.grid, g.grid, "smoothed_dual_energy");
    const GridSpec& gr = q.grid;
    const std::size_t n = gr.cell_count();
    const double gamma2 = 2.0 * p.eps * p.gamma;

    std::vector<double> w(n);
    div_into(gr, q.data, w);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w[i] - g.values[i];
        e += 0.5 * gamma2 * wi * wi + 0.5 * clamp_quad(wi, p.eps, p.c);
    }

    if (p.div_weight > 0.0) {
        const VectorField pd = p_div_apply(q);
        e += 0.5 * (2.0 * p.eps * p.div_weight) * dot(pd.data, pd.data);
    }

    // H1-type smoothing measured through the Dirichlet Laplacian, so the
    // residual is this function's exact gradient.
    std::vector<double> lap(n);
    for (std::size_t a = 0; a < gr.dim(); ++a) {
        auto qa = q.component(a);
        laplacian_dirichlet_into(gr, qa, lap);
        e -= 0.5 / p.alpha * dot(lap, qa);
    }

    for (double v : q.data) {
        const double over = v - p.beta;
        const double under = v + p.beta;
        if (over > 0.0) e += 0.5 * p.alpha * over * over;
        if (under < 0.0) e += 0.5 * p.alpha * under * under;
    }
    return e;
}

double duality_gap(const ScalarField& u, const VectorField& q,
                   const ScalarField& g, const SolverParams& p) {
    require_same_grid(u.grid, g.grid, "duality_gap");
    require_same_grid(q.grid, g.grid, "duality_gap");
    return penalized_energy(u, g, p) + dual_energy(q, g, p);
}

}  // namespace tvrelax
