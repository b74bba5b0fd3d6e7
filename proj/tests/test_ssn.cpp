#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "support.hpp"
#include "tvrelax/energy.hpp"
#include "tvrelax/errors.hpp"
#include "tvrelax/recovery.hpp"
#include "tvrelax/ssn.hpp"

using namespace tvrelax;
using namespace testsupport;

namespace {

// Instance whose w = div q - g and q components all sit at least `margin`
// away from every kink of the residual, so finite differences stay on one
// linear piece. Achieved by drawing q clear of the box faces and then
// back-solving g so each w lands in +-[0.05, 1].
struct SmoothPoint {
    VectorField q;
    ScalarField g;
};

SmoothPoint smooth_point(const GridSpec& gr, std::mt19937_64& rng,
                         const SolverParams& p, double margin) {
    SmoothPoint pt{VectorField::zeros(gr), ScalarField::zeros(gr)};
    pt.q = random_vfield(gr, rng, -0.5, 0.5);
    for (double& v : pt.q.data)
        while (std::abs(v - p.beta) <= margin || std::abs(v + p.beta) <= margin)
            v = uniform(rng, -0.5, 0.5);
    const ScalarField divq = div(pt.q);
    for (std::size_t i = 0; i < gr.cell_count(); ++i) {
        const double sign = (rng() & 1u) ? 1.0 : -1.0;
        pt.g.values[i] = divq.values[i] - sign * uniform(rng, 0.05, 1.0);
    }
    return pt;
}

double rel_gap(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-30});
}

}  // namespace

TEST_CASE("residual vanishes at the trivial instance") {
    SolverParams p;
    const GridSpec gr({5, 4});
    const VectorField r =
        residual(VectorField::zeros(gr), ScalarField::zeros(gr), p);
    for (double v : r.data) CHECK(v == 0.0);
}

TEST_CASE("box violation produces exactly the alpha force in the interior") {
    SolverParams p;
    const GridSpec gr({7, 7});
    VectorField q = VectorField::zeros(gr);
    for (double& v : q.data) v = p.beta + 0.3;

    // at an interior cell with interior forward neighbors the stencil
    // terms of a constant field vanish and only alpha*(q - beta) is left
    const VectorField r = residual(q, ScalarField::zeros(gr), p);
    const std::size_t mid = 3 * 7 + 3;
    CHECK(r.component(0)[mid] ==
          doctest::Approx(p.alpha * 0.3).epsilon(1e-12));
    CHECK(r.component(1)[mid] ==
          doctest::Approx(p.alpha * 0.3).epsilon(1e-12));
}

TEST_CASE("active sets follow the strict-inequality breakpoints") {
    SolverParams p;
    const GridSpec gr({4, 3});
    const std::size_t n = gr.cell_count();

    SUBCASE("w = 0 activates only the lower clamp") {
        const ActiveSets s =
            active_sets(VectorField::zeros(gr), ScalarField::zeros(gr), p);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(s.a1[i] == 0);
            CHECK(s.a2[i] == 1);
            CHECK(s.a3[i] == 0);
            CHECK(s.a4[i] == 0);
        }
        for (std::size_t k = 0; k < 2 * n; ++k) {
            CHECK(s.a5[k] == 0);
            CHECK(s.a6[k] == 0);
        }
    }

    SUBCASE("w on the upper plateau activates a2 and a4 but not a3") {
        const ScalarField g = ScalarField::constant(gr, -(p.eps + p.c));
        const ActiveSets s = active_sets(VectorField::zeros(gr), g, p);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(s.a2[i] == 1);
            CHECK(s.a4[i] == 1);
            CHECK(s.a3[i] == 0);
        }
    }

    SUBCASE("a value exactly on a breakpoint stays inactive") {
        const ScalarField g = ScalarField::constant(gr, p.eps);  // w = -eps
        const ActiveSets s = active_sets(VectorField::zeros(gr), g, p);
        for (std::size_t i = 0; i < n; ++i) CHECK(s.a2[i] == 0);
    }

    SUBCASE("box sets react to q componentwise") {
        VectorField q = VectorField::zeros(gr);
        q.component(0)[2] = p.beta + 1.0;
        q.component(1)[5] = -p.beta - 1.0;
        const ActiveSets s = active_sets(q, ScalarField::zeros(gr), p);
        CHECK(s.a5[2] == 1);
        CHECK(s.a6[n + 5] == 1);
        CHECK(s.a5[n + 5] == 0);
        CHECK(s.a6[2] == 0);
    }
}

TEST_CASE("residual is the gradient of the smoothed dual objective") {
    SolverParams p;
    std::mt19937_64 rng(101);
    const double s = 1e-4;
    for (int trial = 0; trial < 10; ++trial) {
        const GridSpec gr = trial % 2 == 0 ? GridSpec({6, 5}, {0.7, 1.3})
                                           : GridSpec({9}, {0.55});
        const SmoothPoint pt = smooth_point(gr, rng, p, 1e-3);
        const VectorField dq = random_vfield(gr, rng);
        const VectorField r = residual(pt.q, pt.g, p);
        const double predicted = dot(r.data, dq.data);

        VectorField qp = pt.q;
        VectorField qm = pt.q;
        for (std::size_t k = 0; k < dq.data.size(); ++k) {
            qp.data[k] += s * dq.data[k];
            qm.data[k] -= s * dq.data[k];
        }
        const double fd = (smoothed_dual_energy(qp, pt.g, p) -
                           smoothed_dual_energy(qm, pt.g, p)) /
                          (2.0 * s);
        REQUIRE(std::abs(fd) > 1e-6);
        CHECK(rel_gap(fd, predicted) <= 1e-6);
    }
}

TEST_CASE("newton operator reduces to the laplacian block on empty masks") {
    SolverParams p;
    p.gamma = 0.0;
    std::mt19937_64 rng(113);
    const GridSpec gr({5, 4}, {0.9, 1.1});
    const std::size_t n = gr.cell_count();

    ActiveSets s;
    s.a1.assign(n, 0);
    s.a2.assign(n, 0);
    s.a3.assign(n, 0);
    s.a4.assign(n, 0);
    s.a5.assign(2 * n, 0);
    s.a6.assign(2 * n, 0);

    const VectorField dq = random_vfield(gr, rng);
    const VectorField out = newton_apply(s, dq, p);
    for (std::size_t a = 0; a < 2; ++a) {
        ScalarField comp = ScalarField::zeros(gr);
        std::copy(dq.component(a).begin(), dq.component(a).end(),
                  comp.values.begin());
        const ScalarField lap = laplacian_dirichlet(comp);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(out.component(a)[i] ==
                  doctest::Approx(-lap.values[i] / p.alpha).epsilon(1e-13));
    }
}

TEST_CASE("newton operator is symmetric and positive definite") {
    SolverParams p;
    std::mt19937_64 rng(127);
    for (int trial = 0; trial < 10; ++trial) {
        const GridSpec gr = random_grid(rng, 6);
        const VectorField q = random_vfield(gr, rng, -0.3, 0.3);
        const ScalarField g = random_field(gr, rng);
        const ActiveSets s = active_sets(q, g, p);

        const VectorField u = random_vfield(gr, rng);
        const VectorField v = random_vfield(gr, rng);
        const VectorField au = newton_apply(s, u, p);
        const VectorField av = newton_apply(s, v, p);
        const double uav = dot(u.data, av.data);
        const double vau = dot(v.data, au.data);
        CHECK(std::abs(uav - vau) <=
              1e-12 * (std::abs(uav) + std::abs(vau) + 1.0));
        CHECK(dot(av.data, v.data) > 0.0);
    }
}

TEST_CASE("newton operator matches the residual on each linear piece") {
    SolverParams p;
    std::mt19937_64 rng(131);
    const double s = 1e-6;
    for (int trial = 0; trial < 8; ++trial) {
        const GridSpec gr = trial % 2 == 0 ? GridSpec({5, 5}, {0.8, 1.2})
                                           : GridSpec({11}, {0.6});
        const SmoothPoint pt = smooth_point(gr, rng, p, 1e-3);
        const VectorField dq = random_vfield(gr, rng);
        const ActiveSets sets = active_sets(pt.q, pt.g, p);
        const VectorField adq = newton_apply(sets, dq, p);

        VectorField qs = pt.q;
        for (std::size_t k = 0; k < dq.data.size(); ++k)
            qs.data[k] += s * dq.data[k];
        const VectorField r0 = residual(pt.q, pt.g, p);
        const VectorField r1 = residual(qs, pt.g, p);

        double err2 = 0.0;
        for (std::size_t k = 0; k < dq.data.size(); ++k) {
            const double diff = (r1.data[k] - r0.data[k]) / s - adq.data[k];
            err2 += diff * diff;
        }
        CHECK(std::sqrt(err2) <=
              1e-6 * std::max(1.0, norm2(adq.data)));
    }
}

TEST_CASE("divergence-free projection is the identity on curl fields") {
    std::mt19937_64 rng(137);
    const GridSpec gr({7, 6}, {0.8, 1.2});
    const ScalarField psi = random_field(gr, rng);
    const VectorField gpsi = grad(psi);

    // (d_y psi, -d_x psi) is discretely divergence-free because forward
    // differences along distinct axes commute, boundary zeroing included
    VectorField q = VectorField::zeros(gr);
    std::copy(gpsi.component(1).begin(), gpsi.component(1).end(),
              q.component(0).begin());
    for (std::size_t i = 0; i < gr.cell_count(); ++i)
        q.component(1)[i] = -gpsi.component(0)[i];

    const ScalarField dq = div(q);
    for (double v : dq.values) CHECK(std::abs(v) <= 1e-12);

    const VectorField pd = p_div_apply(q);
    double err2 = 0.0;
    for (std::size_t k = 0; k < q.data.size(); ++k) {
        const double diff = pd.data[k] - q.data[k];
        err2 += diff * diff;
    }
    CHECK(std::sqrt(err2) <= 1e-10 * std::max(1.0, norm2(q.data)));
}

TEST_CASE("divergence-free projection annihilates gradient fields") {
    std::mt19937_64 rng(139);
    const GridSpec gr({8, 8});
    const ScalarField psi = random_field(gr, rng);
    const VectorField q = grad(psi);
    const VectorField pd = p_div_apply(q);
    CHECK(norm2(pd.data) <= 1e-9 * std::max(1.0, norm2(q.data)));
}

TEST_CASE("projected fields are divergence-free") {
    std::mt19937_64 rng(149);
    const GridSpec gr({9, 5}, {0.6, 1.4});
    const VectorField q = random_vfield(gr, rng);
    const ScalarField before = div(q);
    const ScalarField after = div(p_div_apply(q));
    CHECK(norm2(after.values) <=
          1e-8 * std::max(1.0, norm2(before.values)));
}

TEST_CASE("pcg solves the identity in one step") {
    std::mt19937_64 rng(151);
    std::vector<double> rhs(17);
    for (double& v : rhs) v = uniform(rng, -1.0, 1.0);
    const LinearOp ident = [](std::span<const double> in,
                              std::span<double> out) {
        std::copy(in.begin(), in.end(), out.begin());
    };
    const PcgResult r = pcg(ident, rhs, ident, 1e-12, 50);
    CHECK(r.iterations == 1);
    for (std::size_t i = 0; i < rhs.size(); ++i) CHECK(r.x[i] == rhs[i]);
}

TEST_CASE("pcg with the exact preconditioner converges in one step") {
    std::mt19937_64 rng(157);
    std::vector<double> diag(23), rhs(23);
    for (double& v : diag) v = uniform(rng, 0.5, 4.0);
    for (double& v : rhs) v = uniform(rng, -1.0, 1.0);
    const LinearOp apply = [&diag](std::span<const double> in,
                                   std::span<double> out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = diag[i] * in[i];
    };
    const LinearOp solve_diag = [&diag](std::span<const double> in,
                                        std::span<double> out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] / diag[i];
    };
    const PcgResult r = pcg(apply, rhs, solve_diag, 1e-12, 50);
    CHECK(r.iterations == 1);
    for (std::size_t i = 0; i < rhs.size(); ++i)
        CHECK(r.x[i] == doctest::Approx(rhs[i] / diag[i]).epsilon(1e-14));
}

TEST_CASE("pcg agrees with a dense factorization of the newton operator") {
    SolverParams p;
    std::mt19937_64 rng(163);
    const GridSpec gr({4, 4});
    const std::size_t dn = 2 * gr.cell_count();
    const VectorField q = random_vfield(gr, rng, -0.3, 0.3);
    const ScalarField g = random_field(gr, rng);
    const ActiveSets sets = active_sets(q, g, p);

    Eigen::MatrixXd a(dn, dn);
    for (std::size_t j = 0; j < dn; ++j) {
        VectorField e = VectorField::zeros(gr);
        e.data[j] = 1.0;
        const VectorField col = newton_apply(sets, e, p);
        for (std::size_t i = 0; i < dn; ++i)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                col.data[i];
    }
    Eigen::VectorXd b(dn);
    for (std::size_t i = 0; i < dn; ++i)
        b(static_cast<Eigen::Index>(i)) = uniform(rng, -1.0, 1.0);
    const Eigen::VectorXd xd = a.ldlt().solve(b);

    const LinearOp apply = [&](std::span<const double> in,
                               std::span<double> out) {
        VectorField vin = VectorField::zeros(gr);
        std::copy(in.begin(), in.end(), vin.data.begin());
        const VectorField vout = newton_apply(sets, vin, p);
        std::copy(vout.data.begin(), vout.data.end(), out.begin());
    };
    const LinearOp ident = [](std::span<const double> in,
                              std::span<double> out) {
        std::copy(in.begin(), in.end(), out.begin());
    };
    std::vector<double> rhs(b.data(), b.data() + dn);
    const PcgResult r = pcg(apply, rhs, ident, 1e-10, 2000);

    double err2 = 0.0;
    for (std::size_t i = 0; i < dn; ++i) {
        const double diff = r.x[i] - xd(static_cast<Eigen::Index>(i));
        err2 += diff * diff;
    }
    CHECK(std::sqrt(err2) <= 1e-8 * std::max(1.0, xd.norm()));
}

TEST_CASE("pcg rejects indefinite operators") {
    std::vector<double> rhs(5, 1.0);
    const LinearOp neg = [](std::span<const double> in,
                            std::span<double> out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = -in[i];
    };
    const LinearOp ident = [](std::span<const double> in,
                              std::span<double> out) {
        std::copy(in.begin(), in.end(), out.begin());
    };
    CHECK_THROWS_AS(pcg(neg, rhs, ident, 1e-10, 10), solver_error);
}

TEST_CASE("pcg returns immediately on a zero right-hand side") {
    const std::vector<double> rhs(9, 0.0);
    const LinearOp ident = [](std::span<const double> in,
                              std::span<double> out) {
        std::copy(in.begin(), in.end(), out.begin());
    };
    const PcgResult r = pcg(ident, rhs, ident, 1e-10, 10);
    CHECK(r.iterations == 0);
    for (double v : r.x) CHECK(v == 0.0);
}

TEST_CASE("solve on the trivial instance stops before iterating") {
    SolverParams p;
    const GridSpec gr({6, 6});
    const auto [q, report] = solve(ScalarField::zeros(gr), p);
    CHECK(report.converged);
    CHECK(report.reason == StopReason::reduction);
    REQUIRE(report.residual_history.size() == 1);
    CHECK(report.residual_history[0] == 0.0);
    CHECK(report.newton_iters == 0);
    CHECK(report.pcg_iters.empty());
    for (double v : q.data) CHECK(v == 0.0);
    // w = 0 recovers u = 1/2 everywhere, the symmetric relaxed point
    CHECK(report.binary_fraction == 0.0);
    CHECK(std::abs(report.final_gap) <= 1e-12);
}

TEST_CASE("solve is deterministic") {
    SolverParams p;
    std::mt19937_64 rng(167);
    const ScalarField g = random_field(GridSpec({8, 8}), rng);
    const auto [q1, r1] = solve(g, p);
    const auto [q2, r2] = solve(g, p);
    CHECK(q1.data == q2.data);
    CHECK(r1.residual_history == r2.residual_history);
    CHECK(r1.pcg_iters == r2.pcg_iters);
    CHECK(r1.converged == r2.converged);
}

TEST_CASE("solve report is internally consistent on a random instance") {
    SolverParams p;
    std::mt19937_64 rng(173);
    const ScalarField g = random_field(GridSpec({8, 8}), rng);
    const auto [q, report] = solve(g, p);
    CHECK(report.converged);
    CHECK(report.newton_iters ==
          static_cast<int>(report.residual_history.size()) - 1);
    CHECK(report.pcg_iters.size() ==
          static_cast<std::size_t>(report.newton_iters));
    CHECK(std::isfinite(report.final_gap));
    CHECK(all_finite(q.data));
    // gamma-regularized dual optima recover a mostly binary primal
    CHECK(report.binary_fraction >= 0.9);
}

TEST_CASE("jacobi and ldlt preconditioning reach the same optimum") {
    std::mt19937_64 rng(179);
    const ScalarField g = random_field(GridSpec({6, 6}), rng);
    SolverParams pl;
    SolverParams pj;
    pj.precond = SolverParams::Precond::jacobi;
    const auto [ql, rl] = solve(g, pl);
    const auto [qj, rj] = solve(g, pj);
    CHECK(rl.converged);
    CHECK(rj.converged);
    const double el =
        primal_energy(threshold(recover_u(ql, g, pl), pl.threshold_t), g,
                      pl.beta);
    const double ej =
        primal_energy(threshold(recover_u(qj, g, pj), pj.threshold_t), g,
                      pj.beta);
    CHECK(el == doctest::Approx(ej).epsilon(1e-6));
}

TEST_CASE("solve validates its inputs") {
    SolverParams p;
    const GridSpec gr({4, 4});
    const ScalarField g = ScalarField::zeros(gr);

    SolverParams bad = p;
    bad.beta = 0.0;
    CHECK_THROWS_AS(solve(g, bad), std::invalid_argument);

    ScalarField gnan = g;
    gnan.values[3] = std::nan("");
    CHECK_THROWS_AS(solve(gnan, p), std::invalid_argument);

    CHECK_THROWS_AS(solve(g, p, VectorField::zeros(GridSpec({5, 4}))),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        residual(VectorField::zeros(GridSpec({5})), ScalarField::zeros(gr), p),
        std::invalid_argument);
    CHECK_THROWS_AS(
        active_sets(VectorField::zeros(GridSpec({5})), g, p),
        std::invalid_argument);

    ActiveSets s;  // wrong sizes
    s.a1.assign(2, 0);
    CHECK_THROWS_AS(newton_apply(s, VectorField::zeros(gr), p),
                    std::invalid_argument);
}

TEST_CASE("stop reasons have stable names") {
    CHECK(to_string(StopReason::reduction) == "reduction");
    CHECK(to_string(StopReason::stall) == "stall");
    CHECK(to_string(StopReason::max_iters) == "max_iters");
}
