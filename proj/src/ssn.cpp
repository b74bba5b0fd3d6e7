#include "tvrelax/ssn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "tvrelax/energy.hpp"
#include "tvrelax/errors.hpp"
#include "tvrelax/recovery.hpp"

namespace tvrelax {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

// Value of gamma2*w + min(w+eps+2c,0) + max(w+eps,0) + max(w-eps-2c,0)
// - max(w-eps,0), branch-exact: on the inner flat branches the max terms
// cancel to exactly 2*eps, which naive clamp arithmetic loses once
// |w| >> eps.
double clamp_bracket(double w, double eps, double c, double gamma2) {
    if (w < -eps - 2.0 * c) return gamma2 * w + (w + eps + 2.0 * c);
    if (w <= -eps) return gamma2 * w;
    if (w < eps) return gamma2 * w + (w + eps);
    if (w <= eps + 2.0 * c) return gamma2 * w + 2.0 * eps;
    return gamma2 * w + (w + eps - 2.0 * c);
}

struct Workspace {
    std::vector<double> cell_a;  // n scratch
    std::vector<double> cell_b;  // n scratch
    std::vector<double> comp;    // n scratch for per-component stencils

    explicit Workspace(std::size_t n) : cell_a(n), cell_b(n), comp(n) {}
};

void residual_into(const GridSpec& gr, std::span<const double> q,
                   std::span<const double> g, const SolverParams& p,
                   std::span<double> out, Workspace& ws) {
    const std::size_t n = gr.cell_count();
    const std::size_t d = gr.dim();
    const double gamma2 = 2.0 * p.eps * p.gamma;

    div_into(gr, q, ws.cell_a);
    for (std::size_t i = 0; i < n; ++i)
        ws.cell_b[i] = clamp_bracket(ws.cell_a[i] - g[i], p.eps, p.c, gamma2);
    grad_into(gr, ws.cell_b, out);
    for (double& v : out) v = -v;

    const double inv_alpha = 1.0 / p.alpha;
    for (std::size_t a = 0; a < d; ++a) {
        laplacian_dirichlet_into(gr, q.subspan(a * n, n), ws.comp);
        double* o = out.data() + a * n;
        for (std::size_t i = 0; i < n; ++i) o[i] -= inv_alpha * ws.comp[i];
    }

    for (std::size_t k = 0; k < q.size(); ++k) {
        const double over = q[k] - p.beta;
        const double under = q[k] + p.beta;
        if (over > 0.0) out[k] += p.alpha * over;
        if (under < 0.0) out[k] += p.alpha * under;
    }

    if (p.div_weight > 0.0) {
        VectorField qf{gr, std::vector<double>(q.begin(), q.end())};
        const VectorField pd = p_div_apply(qf);
        const double lambda2 = 2.0 * p.eps * p.div_weight;
        for (std::size_t k = 0; k < q.size(); ++k) out[k] += lambda2 * pd.data[k];
    }
}

void newton_apply_into(const GridSpec& gr, const ActiveSets& s,
                       const SolverParams& p, std::span<const double> dq,
                       std::span<double> out, Workspace& ws) {
    const std::size_t n = gr.cell_count();
    const std::size_t d = gr.dim();
    const double gamma2 = 2.0 * p.eps * p.gamma;

    div_into(gr, dq, ws.cell_a);
    for (std::size_t i = 0; i < n; ++i) {
        const double coeff = gamma2 + static_cast<double>(s.a1[i]) +
                             static_cast<double>(s.a2[i]) +
                             static_cast<double>(s.a3[i]) -
                             static_cast<double>(s.a4[i]);
        ws.cell_a[i] *= coeff;
    }
    grad_into(gr, ws.cell_a, out);
    for (double& v : out) v = -v;

    const double inv_alpha = 1.0 / p.alpha;
    for (std::size_t a = 0; a < d; ++a) {
        laplacian_dirichlet_into(gr, dq.subspan(a * n, n), ws.comp);
        double* o = out.data() + a * n;
        for (std::size_t i = 0; i < n; ++i) o[i] -= inv_alpha * ws.comp[i];
    }

    for (std::size_t k = 0; k < dq.size(); ++k)
        if (s.a5[k] | s.a6[k]) out[k] += p.alpha * dq[k];

    if (p.div_weight > 0.0) {
        VectorField dqf{gr, std::vector<double>(dq.begin(), dq.end())};
        const VectorField pd = p_div_apply(dqf);
        const double lambda2 = 2.0 * p.eps * p.div_weight;
        for (std::size_t k = 0; k < dq.size(); ++k) out[k] += lambda2 * pd.data[k];
    }
}

// Cached inverse of (1/alpha)(-Lap) + alpha*(a5 + a6), block-diagonal per
// component. The ldlt mode refactorizes a block only when its box mask
// changed since the last factorization; jacobi uses the diagonal alone.
class Preconditioner {
public:
    Preconditioner(const GridSpec& gr, const SolverParams& p)
        : grid_(gr), alpha_(p.alpha), mode_(p.precond) {
        const std::size_t n = grid_.cell_count();
        lap_diag_ = 0.0;
        for (std::size_t a = 0; a < grid_.dim(); ++a)
            lap_diag_ += 2.0 / (grid_.spacing(a) * grid_.spacing(a));
        blocks_.resize(grid_.dim());
        for (auto& b : blocks_) b.mask.assign(n, 2);  // force first factorization
    }

    void update(const ActiveSets& s) {
        const std::size_t n = grid_.cell_count();
        for (std::size_t a = 0; a < grid_.dim(); ++a) {
            Block& blk = blocks_[a];
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint8_t m = s.a5[a * n + i] | s.a6[a * n + i];
                if (blk.mask[i] != m) {
                    blk.mask[i] = m;
                    changed = true;
                }
            }
            if (changed && mode_ == SolverParams::Precond::ldlt) factorize(blk);
        }
    }

    void solve(std::span<const double> in, std::span<double> out) const {
        const std::size_t n = grid_.cell_count();
        if (mode_ == SolverParams::Precond::jacobi) {
            for (std::size_t a = 0; a < grid_.dim(); ++a) {
                const Block& blk = blocks_[a];
                const double base = lap_diag_ / alpha_;
                for (std::size_t i = 0; i < n; ++i) {
                    const double diag = base + (blk.mask[i] ? alpha_ : 0.0);
                    out[a * n + i] = in[a * n + i] / diag;
                }
            }
            return;
        }
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
        for (std::size_t a = 0; a < grid_.dim(); ++a) {
            for (std::size_t i = 0; i < n; ++i)
                rhs[static_cast<Eigen::Index>(i)] = in[a * n + i];
            const Eigen::VectorXd x = blocks_[a].ldlt->solve(rhs);
            for (std::size_t i = 0; i < n; ++i)
                out[a * n + i] = x[static_cast<Eigen::Index>(i)];
        }
    }

private:
    struct Block {
        std::vector<std::uint8_t> mask;
        std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt;
    };

    void factorize(Block& blk) {
        const std::size_t n = grid_.cell_count();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(n * (1 + 2 * grid_.dim()));
        const double inv_alpha = 1.0 / alpha_;
        for (std::size_t i = 0; i < n; ++i) {
            double diag = lap_diag_ * inv_alpha;
            if (blk.mask[i]) diag += alpha_;
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
        }
        for (std::size_t a = 0; a < grid_.dim(); ++a) {
            const std::size_t s = grid_.stride(a);
            const std::size_t e = grid_.extent(a);
            const double off = -inv_alpha / (grid_.spacing(a) * grid_.spacing(a));
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t coord = (i / s) % e;
                if (coord + 1 < e) {
                    trip.emplace_back(static_cast<int>(i), static_cast<int>(i + s), off);
                    trip.emplace_back(static_cast<int>(i + s), static_cast<int>(i), off);
                }
            }
        }
        Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n),
                                      static_cast<Eigen::Index>(n));
        m.setFromTriplets(trip.begin(), trip.end());
        blk.ldlt = std::make_unique<
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(m);
        if (blk.ldlt->info() != Eigen::Success)
            throw solver_error("preconditioner factorization failed");
    }

    GridSpec grid_;
    double alpha_;
    SolverParams::Precond mode_;
    double lap_diag_ = 0.0;
    std::vector<Block> blocks_;
};

}  // namespace

ActiveSets active_sets(const VectorField& q, const ScalarField& g,
                       const SolverParams& p) {
    require(q.grid == g.grid, "active_sets: grid mismatch");
    const std::size_t n = g.grid.cell_count();
    ActiveSets s;
    s.a1.resize(n);
    s.a2.resize(n);
    s.a3.resize(n);
    s.a4.resize(n);
    std::vector<double> w(n);
    div_into(q.grid, q.data, w);
    const double knot = p.eps + 2.0 * p.c;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w[i] - g.values[i];
        s.a1[i] = wi < -knot;
        s.a2[i] = wi > -p.eps;
        s.a3[i] = wi > knot;
        s.a4[i] = wi > p.eps;
    }
    const std::size_t dn = q.data.size();
    s.a5.resize(dn);
    s.a6.resize(dn);
    for (std::size_t k = 0; k < dn; ++k) {
        s.a5[k] = q.data[k] > p.beta;
        s.a6[k] = q.data[k] < -p.beta;
    }
    return s;
}

VectorField residual(const VectorField& q, const ScalarField& g,
                     const SolverParams& p) {
    require(q.grid == g.grid, "residual: grid mismatch");
    Workspace ws(g.grid.cell_count());
    VectorField out = VectorField::zeros(q.grid);
    residual_into(q.grid, q.data, g.values, p, out.data, ws);
    return out;
}

VectorField newton_apply(const ActiveSets& s, const VectorField& dq,
                         const SolverParams& p) {
    const std::size_t n = dq.grid.cell_count();
    require(s.a1.size() == n && s.a2.size() == n && s.a3.size() == n &&
                s.a4.size() == n && s.a5.size() == dq.data.size() &&
                s.a6.size() == dq.data.size(),
            "newton_apply: active set sizes do not match the field");
    Workspace ws(n);
    VectorField out = VectorField::zeros(dq.grid);
    newton_apply_into(dq.grid, s, p, dq.data, out.data, ws);
    return out;
}

VectorField p_div_apply(const VectorField& q, double tol) {
    const GridSpec& gr = q.grid;
    const std::size_t n = gr.cell_count();

    std::vector<double> b(n);
    div_into(gr, q.data, b);
    for (double& v : b) v = -v;

    std::vector<double> gbuf(q.data.size());
    const LinearOp apply = [&gr, &gbuf](std::span<const double> in,
                                        std::span<double> out) {
        grad_into(gr, in, gbuf);
        div_into(gr, gbuf, out);
        for (double& v : out) v = -v;
    };
    const LinearOp ident = [](std::span<const double> in, std::span<double> out) {
        std::copy(in.begin(), in.end(), out.begin());
    };
    const PcgResult phi = pcg(apply, b, ident, tol, static_cast<int>(8 * n));

    VectorField out = q;
    grad_into(gr, phi.x, gbuf);
    for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] -= gbuf[k];
    return out;
}

PcgResult pcg(const LinearOp& apply, std::span<const double> rhs,
              const LinearOp& precond_solve, double tol, int max_iters) {
    const std::size_t n = rhs.size();
    PcgResult res;
    res.x.assign(n, 0.0);

    const double rhs_norm = norm2(rhs);
    if (rhs_norm == 0.0) return res;
    const double stop = tol * rhs_norm;

    std::vector<double> r(rhs.begin(), rhs.end());
    std::vector<double> z(n), pdir(n), ap(n);
    precond_solve(r, z);
    pdir = z;
    double rz = dot(r, z);

    for (int k = 1; k <= max_iters; ++k) {
        apply(pdir, ap);
        const double pap = dot(pdir, ap);
        if (pap <= 0.0)
            throw solver_error(
                "pcg: nonpositive curvature, operator is not positive definite");
        const double step = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += step * pdir[i];
            r[i] -= step * ap[i];
        }
        res.iterations = k;
        if (norm2(r) <= stop) return res;
        precond_solve(r, z);
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        for (std::size_t i = 0; i < n; ++i) pdir[i] = z[i] + beta * pdir[i];
        rz = rz_next;
    }
    return res;
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::reduction: return "reduction";
        case StopReason::stall: return "stall";
        case StopReason::max_iters: return "max_iters";
    }
    return "unknown";
}

std::pair<VectorField, SolveReport> solve(const ScalarField& g,
                                          const SolverParams& p) {
    return solve(g, p, VectorField::zeros(g.grid));
}

std::pair<VectorField, SolveReport> solve(const ScalarField& g,
                                          const SolverParams& p,
                                          const VectorField& q0) {
    p.validate();
    require(q0.grid == g.grid, "solve: grid mismatch between q0 and g");
    require(all_finite(g.values), "solve: g contains nonfinite values");
    require(all_finite(q0.data), "solve: q0 contains nonfinite values");

    const auto t0 = std::chrono::steady_clock::now();
    const GridSpec& gr = g.grid;
    const std::size_t n = gr.cell_count();

    VectorField q = q0;
    Workspace ws(n);
    VectorField res_vec = VectorField::zeros(gr);
    residual_into(gr, q.data, g.values, p, res_vec.data, ws);

    SolveReport report;
    const double res0 = norm2(res_vec.data);
    report.residual_history.push_back(res0);

    if (res0 == 0.0) {
        report.converged = true;
        report.reason = StopReason::reduction;
    } else {
        Preconditioner precond(gr, p);
        const double target = p.newton_reduction * res0;
        double res_prev = res0;
        bool done = false;

        VectorField rhs = VectorField::zeros(gr);
        for (int k = 0; k < p.newton_max_iters && !done; ++k) {
            const ActiveSets sets = active_sets(q, g, p);
            precond.update(sets);

            for (std::size_t i = 0; i < rhs.data.size(); ++i)
                rhs.data[i] = -res_vec.data[i];

            const double ratio = res_prev / res0;
            const double forcing =
                p.pcg_base_tol * std::min(std::pow(ratio, 1.5), ratio);
            const LinearOp op = [&gr, &sets, &p, &ws](std::span<const double> in,
                                                      std::span<double> out) {
                newton_apply_into(gr, sets, p, in, out, ws);
            };
            const LinearOp pre = [&precond](std::span<const double> in,
                                            std::span<double> out) {
                precond.solve(in, out);
            };
            const PcgResult step = pcg(op, rhs.data, pre, forcing, p.pcg_max_iters);
            report.pcg_iters.push_back(step.iterations);

            for (std::size_t i = 0; i < q.data.size(); ++i) q.data[i] += step.x[i];

            residual_into(gr, q.data, g.values, p, res_vec.data, ws);
            const double res = norm2(res_vec.data);
            report.residual_history.push_back(res);

            if (res <= target) {
                report.converged = true;
                report.reason = StopReason::reduction;
                done = true;
            } else if (std::abs(res - res_prev) < p.newton_stall) {
                report.converged = true;
                report.reason = StopReason::stall;
                done = true;
            }
            res_prev = res;
        }
        if (!done) {
            report.converged = false;
            report.reason = StopReason::max_iters;
        }
    }

    report.newton_iters =
        static_cast<int>(report.residual_history.size()) - 1;

    const ScalarField u = recover_u(q, g, p);
    report.binary_fraction = binary_fraction(u, 1e-6);
    report.final_gap = duality_gap(u, q, g, p);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return {std::move(q), report};
}

}  // namespace tvrelax
