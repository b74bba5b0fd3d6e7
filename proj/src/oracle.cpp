#include "tvrelax/oracle.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tvrelax/errors.hpp"

namespace tvrelax {

double oracle_binary_energy(const ScalarField& g, double beta,
                            std::uint64_t bits) {
    const GridSpec& gr = g.grid;
    const std::size_t n = gr.cell_count();
    if (n > 64)
        throw std::invalid_argument(
            "oracle_binary_energy: more than 64 cells cannot be bit-encoded");

    double data = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if ((bits >> i) & 1u) data += g.values[i];

    double edges = 0.0;
    for (std::size_t a = 0; a < gr.dim(); ++a) {
        const std::size_t s = gr.stride(a);
        const std::size_t e = gr.extent(a);
        const double inv_h = 1.0 / gr.spacing(a);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t coord = (i / s) % e;
            if (coord + 1 >= e) continue;
            const unsigned ui = (bits >> i) & 1u;
            const unsigned uj = (bits >> (i + s)) & 1u;
            if (ui != uj) edges += inv_h;
        }
    }
    return (data + beta * edges) * gr.cell_volume();
}

namespace {

ScalarField field_from_bits(const GridSpec& gr, std::uint64_t bits) {
    ScalarField u = ScalarField::zeros(gr);
    for (std::size_t i = 0; i < gr.cell_count(); ++i)
        u.values[i] = static_cast<double>((bits >> i) & 1u);
    return u;
}

}  // namespace

OracleResult brute_force_min(const ScalarField& g, double beta) {
    const std::size_t n = g.grid.cell_count();
    if (n > 20)
        throw std::invalid_argument(
            "brute_force_min: enumeration requires at most 20 cells");
    const std::uint64_t total = std::uint64_t{1} << n;

    std::uint64_t best_bits = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t bits = 0; bits < total; ++bits) {
        const double e = oracle_binary_energy(g, beta, bits);
        if (e < best) {
            best = e;
            best_bits = bits;
        }
    }
    return {field_from_bits(g.grid, best_bits), best};
}

OracleResult brute_force_volume(const ScalarField& g, double beta,
                                double target, double vol_tol) {
    const std::size_t n = g.grid.cell_count();
    if (n > 20)
        throw std::invalid_argument(
            "brute_force_volume: enumeration requires at most 20 cells");
    const std::uint64_t total = std::uint64_t{1} << n;
    const double vol = g.grid.cell_volume();

    std::uint64_t best_bits = 0;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::uint64_t bits = 0; bits < total; ++bits) {
        const double v = static_cast<double>(std::popcount(bits)) * vol;
        if (std::abs(v - target) > vol_tol) continue;
        const double e = oracle_binary_energy(g, beta, bits);
        if (e < best) {
            best = e;
            best_bits = bits;
            found = true;
        }
    }
    if (!found)
        throw solver_error(
            "brute_force_volume: no binary field meets the volume window");
    return {field_from_bits(g.grid, best_bits), best};
}

}  // namespace tvrelax
