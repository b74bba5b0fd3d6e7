#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tvrelax {

/// Regular cell grid in one or two dimensions.
///
/// Cells are stored row-major with axis 0 fastest: on a grid with extents
/// {nx, ny} the cell (x, y) lives at index y*nx + x. Each axis carries a
/// spacing; integrals over the grid are plain sums times the cell volume.
class GridSpec {
public:
    /// Throws std::invalid_argument unless 1 <= dim <= 2, every extent is
    /// at least 2 and every spacing is positive and finite. An empty
    /// spacing vector means unit spacing on all axes.
    explicit GridSpec(std::vector<std::size_t> extents,
                      std::vector<double> spacing = {});

    std::size_t dim() const { return extents_.size(); }
    std::size_t extent(std::size_t axis) const { return extents_[axis]; }
    double spacing(std::size_t axis) const { return spacing_[axis]; }
    std::size_t stride(std::size_t axis) const { return axis == 0 ? 1 : extents_[0]; }
    std::size_t cell_count() const { return n_; }
    double cell_volume() const { return volume_; }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    std::vector<std::size_t> extents_;
    std::vector<double> spacing_;
    std::size_t n_ = 0;
    double volume_ = 1.0;
};

/// One value per cell.
struct ScalarField {
    GridSpec grid;
    std::vector<double> values;

    static ScalarField zeros(const GridSpec& g);
    static ScalarField constant(const GridSpec& g, double value);
};

/// d values per cell, stored as d contiguous blocks of n values each.
struct VectorField {
    GridSpec grid;
    std::vector<double> data;

    static VectorField zeros(const GridSpec& g);

    std::span<double> component(std::size_t axis);
    std::span<const double> component(std::size_t axis) const;
};

/// Forward difference per axis, divided by the axis spacing; the
/// difference at the far face is zero (replicate boundary).
VectorField grad(const ScalarField& u);

/// Negative adjoint of grad under plain-sum inner products:
/// <grad u, p> = -<u, div p> holds exactly for all u, p.
ScalarField div(const VectorField& p);

/// Five-point (three-point in 1-d) Laplacian with homogeneous Dirichlet
/// boundary: missing neighbors count as zero.
ScalarField laplacian_dirichlet(const ScalarField& u);

// Span forms used by the solver's hot loops; out must not alias in.
void grad_into(const GridSpec& g, std::span<const double> u, std::span<double> out);
void div_into(const GridSpec& g, std::span<const double> p, std::span<double> out);
void laplacian_dirichlet_into(const GridSpec& g, std::span<const double> u,
                              std::span<double> out);

/// Plain-sum inner product and Euclidean norm.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

bool all_finite(std::span<const double> a);

}  // namespace tvrelax
