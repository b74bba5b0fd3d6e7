#include "tvrelax/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tvrelax {

GridSpec::GridSpec(std::vector<std::size_t> extents, std::vector<double> spacing)
    : extents_(std::move(extents)), spacing_(std::move(spacing)) {
    if (extents_.empty() || extents_.size() > 2)
        throw std::invalid_argument("GridSpec: dimension must be 1 or 2");
    if (spacing_.empty()) spacing_.assign(extents_.size(), 1.0);
    if (spacing_.size() != extents_.size())
        throw std::invalid_argument("GridSpec: one spacing per axis required");

    n_ = 1;
    volume_ = 1.0;
    for (std::size_t a = 0; a < extents_.size(); ++a) {
        if (extents_[a] < 2)
            throw std::invalid_argument("GridSpec: each extent must be >= 2");
        if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
            throw std::invalid_argument("GridSpec: spacing must be positive and finite");
        if (n_ > std::numeric_limits<std::size_t>::max() / extents_[a])
            throw std::invalid_argument("GridSpec: cell count overflow");
        n_ *= extents_[a];
        volume_ *= spacing_[a];
    }
}

ScalarField ScalarField::zeros(const GridSpec& g) {
    return {g, std::vector<double>(g.cell_count(), 0.0)};
}

ScalarField ScalarField::constant(const GridSpec& g, double value) {
    return {g, std::vector<double>(g.cell_count(), value)};
}

VectorField VectorField::zeros(const GridSpec& g) {
    return {g, std::vector<double>(g.dim() * g.cell_count(), 0.0)};
}

std::span<double> VectorField::component(std::size_t axis) {
    const std::size_t n = grid.cell_count();
    return {data.data() + axis * n, n};
}

std::span<const double> VectorField::component(std::size_t axis) const {
    const std::size_t n = grid.cell_count();
    return {data.data() + axis * n, n};
}

void grad_into(const GridSpec& g, std::span<const double> u, std::span<double> out) {
    const std::size_t n = g.cell_count();
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const std::size_t s = g.stride(a);
        const std::size_t e = g.extent(a);
        const double inv_h = 1.0 / g.spacing(a);
        double* o = out.data() + a * n;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t coord = (i / s) % e;
            o[i] = coord + 1 < e ? (u[i + s] - u[i]) * inv_h : 0.0;
        }
    }
}

void div_into(const GridSpec& g, std::span<const double> p, std::span<double> out) {
    const std::size_t n = g.cell_count();
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const std::size_t s = g.stride(a);
        const std::size_t e = g.extent(a);
        const double inv_h = 1.0 / g.spacing(a);
        const double* pa = p.data() + a * n;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t coord = (i / s) % e;
            double v = 0.0;
            if (coord + 1 < e) v += pa[i];
            if (coord > 0) v -= pa[i - s];
            out[i] += v * inv_h;
        }
    }
}

void laplacian_dirichlet_into(const GridSpec& g, std::span<const double> u,
                              std::span<double> out) {
    const std::size_t n = g.cell_count();
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const std::size_t s = g.stride(a);
        const std::size_t e = g.extent(a);
        const double inv_h2 = 1.0 / (g.spacing(a) * g.spacing(a));
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t coord = (i / s) % e;
            double v = -2.0 * u[i];
            if (coord > 0) v += u[i - s];
            if (coord + 1 < e) v += u[i + s];
            out[i] += v * inv_h2;
        }
    }
}

VectorField grad(const ScalarField& u) {
    VectorField out = VectorField::zeros(u.grid);
    grad_into(u.grid, u.values, out.data);
    return out;
}

ScalarField div(const VectorField& p) {
    ScalarField out = ScalarField::zeros(p.grid);
    div_into(p.grid, p.data, out.values);
    return out;
}

ScalarField laplacian_dirichlet(const ScalarField& u) {
    ScalarField out = ScalarField::zeros(u.grid);
    laplacian_dirichlet_into(u.grid, u.values, out.values);
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace tvrelax
