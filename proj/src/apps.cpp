#include "tvrelax/apps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tvrelax/energy.hpp"
#include "tvrelax/recovery.hpp"

namespace tvrelax {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

double sq(double d) { return d * d; }

double range_of(const ScalarField& f, double& fmin, double& fmax) {
    fmin = std::numeric_limits<double>::infinity();
    fmax = -fmin;
    for (double v : f.values) {
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
    }
    return fmax - fmin;
}

// l1 distance times the cell volume.
double change_measure(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        s += std::abs(a.values[i] - b.values[i]);
    return s * a.grid.cell_volume();
}

}  // namespace

ScalarField denoise_binary(const ScalarField& f, const SolverParams& p,
                           SolveReport* report) {
    require(all_finite(f.values), "denoise_binary: f contains nonfinite values");
    ScalarField g = f;
    for (double& v : g.values) v = 0.5 - v;
    auto [q, rep] = solve(g, p);
    if (report) *report = rep;
    return threshold(recover_u(q, g, p), p.threshold_t);
}

SegmentationState chan_vese(const ScalarField& f, const SolverParams& p,
                            int outer_cap, double outer_tol) {
    return chan_vese(f, p, threshold(f, 0.5), outer_cap, outer_tol);
}

SegmentationState chan_vese(const ScalarField& f, const SolverParams& p,
                            const ScalarField& u0, int outer_cap,
                            double outer_tol) {
    p.validate();
    require(u0.grid == f.grid, "chan_vese: grid mismatch between u0 and f");
    require(all_finite(f.values), "chan_vese: f contains nonfinite values");
    require(outer_cap > 0, "chan_vese: outer_cap must be positive");
    double fmin, fmax;
    require(range_of(f, fmin, fmax) > 0.0,
            "chan_vese: constant image cannot be segmented");

    const std::size_t n = f.grid.cell_count();
    const double vol = f.grid.cell_volume();
    const double domain = static_cast<double>(n) * vol;

    SegmentationState st;
    st.u = threshold(u0, p.threshold_t);

    // Region means, accumulated phase by phase with 0/1 weights; an empty
    // phase keeps its previous constant and raises the flag.
    const auto update_constants = [&](bool init) {
        double w1 = 0.0, s1 = 0.0, w0 = 0.0, s0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z1 = st.u.values[i];
            const double z0 = 1.0 - st.u.values[i];
            w1 += z1;
            s1 += z1 * f.values[i];
            w0 += z0;
            s0 += z0 * f.values[i];
        }
        if (w1 > 0.0) {
            st.c1 = s1 / w1;
        } else {
            if (init) st.c1 = fmax;
            st.empty_phase_flagged = true;
        }
        if (w0 > 0.0) {
            st.c2 = s0 / w0;
        } else {
            if (init) st.c2 = fmin;
            st.empty_phase_flagged = true;
        }
    };
    update_constants(true);

    VectorField q = VectorField::zeros(f.grid);
    ScalarField g = ScalarField::zeros(f.grid);
    for (int k = 1; k <= outer_cap; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            acc -= sq(st.c2 - f.values[i]);
            acc += sq(st.c1 - f.values[i]);
            g.values[i] = acc;
        }
        auto [qk, rep] = solve(g, p, q);
        q = std::move(qk);
        st.last_solve = rep;
        ScalarField u_new = threshold(recover_u(q, g, p), p.threshold_t);

        const double change = change_measure(u_new, st.u);
        st.u = std::move(u_new);
        st.outer_iters = k;
        update_constants(false);

        double fit = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            fit += sq(st.c1 - f.values[i]) * st.u.values[i] +
                   sq(st.c2 - f.values[i]) * (1.0 - st.u.values[i]);
        st.energy_history.push_back(fit * vol + p.beta * tv(st.u));

        if (change <= outer_tol * domain) {
            st.converged = true;
            break;
        }
    }
    return st;
}

ScalarField label_gradient(const LabelState& s, const ScalarField& f,
                           std::size_t i) {
    require(i < s.m, "label_gradient: indicator index out of range");
    require(s.indicators.size() == s.m && s.constants.size() == (1u << s.m),
            "label_gradient: inconsistent state");
    for (const ScalarField& u : s.indicators)
        require(u.grid == f.grid, "label_gradient: grid mismatch");

    const std::size_t n = f.grid.cell_count();
    const std::size_t codes = std::size_t{1} << s.m;
    ScalarField g = ScalarField::zeros(f.grid);
    for (std::size_t x = 0; x < n; ++x) {
        double acc = 0.0;
        for (std::size_t b = 0; b < codes; ++b) {
            double z = 1.0;
            for (std::size_t j = 0; j < s.m; ++j) {
                if (j == i) continue;
                const double uj = s.indicators[j].values[x];
                z *= ((b >> j) & 1u) ? uj : 1.0 - uj;
            }
            const double t = z * sq(s.constants[b] - f.values[x]);
            if ((b >> i) & 1u)
                acc += t;
            else
                acc -= t;
        }
        g.values[x] = acc;
    }
    return g;
}

namespace {

// Z_b weights of the current binary labeling, one pass per code.
void label_constants(LabelState& st, const ScalarField& f, bool init,
                     double fallback) {
    const std::size_t n = f.grid.cell_count();
    const std::size_t codes = std::size_t{1} << st.m;
    for (std::size_t b = 0; b < codes; ++b) {
        double w = 0.0, s = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            double z = 1.0;
            for (std::size_t j = 0; j < st.m; ++j) {
                const double uj = st.indicators[j].values[x];
                z *= ((b >> j) & 1u) ? uj : 1.0 - uj;
            }
            w += z;
            s += z * f.values[x];
        }
        if (w > 0.0) {
            st.constants[b] = s / w;
            st.frozen_phases[b] = 0;
        } else {
            if (init) st.constants[b] = fallback;
            st.frozen_phases[b] = 1;
            st.empty_phase_flagged = true;
        }
    }
}

void label_piecewise(LabelState& st) {
    const std::size_t n = st.piecewise_image.grid.cell_count();
    const std::size_t codes = std::size_t{1} << st.m;
    for (std::size_t x = 0; x < n; ++x) {
        double acc = 0.0;
        for (std::size_t b = 0; b < codes; ++b) {
            double z = 1.0;
            for (std::size_t j = 0; j < st.m; ++j) {
                const double uj = st.indicators[j].values[x];
                z *= ((b >> j) & 1u) ? uj : 1.0 - uj;
            }
            acc += st.constants[b] * z;
        }
        st.piecewise_image.values[x] = acc;
    }
}

double label_energy(const LabelState& st, const ScalarField& f, double beta) {
    const std::size_t n = f.grid.cell_count();
    const std::size_t codes = std::size_t{1} << st.m;
    double fit = 0.0;
    for (std::size_t b = 0; b < codes; ++b) {
        for (std::size_t x = 0; x < n; ++x) {
            double z = 1.0;
            for (std::size_t j = 0; j < st.m; ++j) {
                const double uj = st.indicators[j].values[x];
                z *= ((b >> j) & 1u) ? uj : 1.0 - uj;
            }
            fit += z * sq(st.constants[b] - f.values[x]);
        }
    }
    double e = fit * f.grid.cell_volume();
    for (const ScalarField& u : st.indicators) e += beta * tv(u);
    return e;
}

}  // namespace

LabelState multilabel(const ScalarField& f, const SolverParams& p,
                      std::size_t m, int sweep_cap, double outer_tol) {
    require(m >= 1 && m <= 8, "multilabel: m must lie in [1,8]");
    require(all_finite(f.values), "multilabel: f contains nonfinite values");
    double fmin, fmax;
    const double range = range_of(f, fmin, fmax);
    require(range > 0.0, "multilabel: constant image cannot be labeled");

    // Quantize f into 2^m level bins; indicator j takes bit j of the bin.
    const std::size_t codes = std::size_t{1} << m;
    std::vector<ScalarField> u0(m, ScalarField::zeros(f.grid));
    for (std::size_t x = 0; x < f.values.size(); ++x) {
        const double rel = (f.values[x] - fmin) / range;
        const double scaled = std::floor(rel * static_cast<double>(codes));
        const std::size_t bin = static_cast<std::size_t>(std::clamp(
            scaled, 0.0, static_cast<double>(codes - 1)));
        for (std::size_t j = 0; j < m; ++j)
            u0[j].values[x] = static_cast<double>((bin >> j) & 1u);
    }
    return multilabel(f, p, m, u0, sweep_cap, outer_tol);
}

LabelState multilabel(const ScalarField& f, const SolverParams& p,
                      std::size_t m, const std::vector<ScalarField>& u0,
                      int sweep_cap, double outer_tol) {
    p.validate();
    require(m >= 1 && m <= 8, "multilabel: m must lie in [1,8]");
    require(u0.size() == m, "multilabel: u0 must supply one field per indicator");
    for (const ScalarField& u : u0)
        require(u.grid == f.grid, "multilabel: grid mismatch between u0 and f");
    require(all_finite(f.values), "multilabel: f contains nonfinite values");
    require(sweep_cap > 0, "multilabel: sweep_cap must be positive");
    double fmin, fmax;
    double mean = 0.0;
    require(range_of(f, fmin, fmax) > 0.0,
            "multilabel: constant image cannot be labeled");
    for (double v : f.values) mean += v;
    mean /= static_cast<double>(f.values.size());

    const std::size_t n = f.grid.cell_count();
    const double domain = static_cast<double>(n) * f.grid.cell_volume();
    const std::size_t codes = std::size_t{1} << m;

    LabelState st;
    st.m = m;
    st.indicators.reserve(m);
    for (const ScalarField& u : u0)
        st.indicators.push_back(threshold(u, p.threshold_t));
    st.constants.assign(codes, 0.0);
    st.frozen_phases.assign(codes, 0);
    st.piecewise_image = ScalarField::zeros(f.grid);
    label_constants(st, f, true, mean);

    std::vector<VectorField> duals(m, VectorField::zeros(f.grid));

    struct Snapshot {
        LabelState state;
        double energy;
    };
    Snapshot best{st, std::numeric_limits<double>::infinity()};

    for (int k = 1; k <= sweep_cap; ++k) {
        double change = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const ScalarField g = label_gradient(st, f, i);
            auto [qi, rep] = solve(g, p, duals[i]);
            duals[i] = std::move(qi);
            st.last_solve = rep;
            ScalarField u_new =
                threshold(recover_u(duals[i], g, p), p.threshold_t);
            change += change_measure(u_new, st.indicators[i]);
            st.indicators[i] = std::move(u_new);
        }
        st.sweeps = k;
        label_constants(st, f, false, mean);
        label_piecewise(st);
        const double energy = label_energy(st, f, p.beta);
        st.energy_history.push_back(energy);

        if (change <= outer_tol * domain) {
            st.converged = true;
            return st;
        }
        if (energy < best.energy) best = Snapshot{st, energy};
    }

    // Cap reached: hand back the lowest-energy sweep, with the full history.
    best.state.sweeps = st.sweeps;
    best.state.energy_history = std::move(st.energy_history);
    best.state.empty_phase_flagged = st.empty_phase_flagged;
    best.state.converged = false;
    return best.state;
}

}  // namespace tvrelax
