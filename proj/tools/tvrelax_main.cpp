// Command-line front end: image ingestion, noise injection, solver and
// application drivers, machine-readable reports.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 solver failure.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <charconv>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tvrelax/apps.hpp"
#include "tvrelax/energy.hpp"
#include "tvrelax/errors.hpp"
#include "tvrelax/io.hpp"
#include "tvrelax/noise.hpp"
#include "tvrelax/recovery.hpp"
#include "tvrelax/ssn.hpp"
#include "tvrelax/volume.hpp"

namespace {

using nlohmann::json;
using namespace tvrelax;

constexpr int kSchemaVersion = 1;

bool has_ext(const std::string& path, const char* ext) {
    const auto dot = path.rfind('.');
    return dot != std::string::npos && path.substr(dot) == ext;
}

ScalarField read_field(const std::string& path) {
    return has_ext(path, ".csv") ? read_csv_grid(path) : read_pgm(path);
}

void write_field(const std::string& path, const ScalarField& f) {
    if (has_ext(path, ".csv"))
        write_csv_grid(path, f);
    else
        write_pgm(path, f);
}

std::uint64_t fnv1a(const unsigned char* data, std::size_t len,
                    std::uint64_t h = 14695981039346656037ull) {
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

// Hash of the binary initialization; one byte per cell per field.
std::string init_hash(const std::vector<const ScalarField*>& fields, double t) {
    std::uint64_t h = 14695981039346656037ull;
    for (const ScalarField* f : fields) {
        for (double v : f->values) {
            const unsigned char b = v > t ? 1 : 0;
            h = fnv1a(&b, 1, h);
        }
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

json grid_json(const GridSpec& g) {
    json extents = json::array(), spacing = json::array();
    for (std::size_t a = 0; a < g.dim(); ++a) {
        extents.push_back(g.extent(a));
        spacing.push_back(g.spacing(a));
    }
    return {{"extents", extents}, {"spacing", spacing}};
}

json params_json(const SolverParams& p) {
    return {{"beta", p.beta},
            {"c", p.c},
            {"eps", p.eps},
            {"gamma", p.gamma},
            {"alpha", p.alpha},
            {"div_weight", p.div_weight},
            {"threshold", p.threshold_t},
            {"newton_reduction", p.newton_reduction},
            {"newton_stall", p.newton_stall},
            {"newton_max_iters", p.newton_max_iters},
            {"pcg_base_tol", p.pcg_base_tol},
            {"pcg_max_iters", p.pcg_max_iters},
            {"precond",
             p.precond == SolverParams::Precond::jacobi ? "jacobi" : "ldlt"}};
}

json solve_json(const SolveReport& r) {
    return {{"newton_iters", r.newton_iters},
            {"converged", r.converged},
            {"reason", to_string(r.reason)},
            {"residual_initial", r.residual_history.front()},
            {"residual_final", r.residual_history.back()},
            {"pcg_total",
             std::accumulate(r.pcg_iters.begin(), r.pcg_iters.end(), 0)},
            {"final_gap", r.final_gap},
            {"binary_fraction", r.binary_fraction},
            {"wall_time_s", r.wall_time_s}};
}

void write_report(const std::string& path, const json& j) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << j.dump(2) << '\n';
    if (!out) throw io_error(path + ": write failed");
}

void write_residuals(const std::string& path, const SolveReport& r) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << "iter,residual,pcg_iters\n";
    char buf[40];
    for (std::size_t i = 0; i < r.residual_history.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", r.residual_history[i]);
        out << i << ',' << buf << ','
            << (i == 0 ? 0 : r.pcg_iters[i - 1]) << '\n';
    }
    if (!out) throw io_error(path + ": write failed");
}

// Solver parameters shared by every solving subcommand, with the
// precedence flags > --config JSON > built-in defaults.
struct ParamOptions {
    SolverParams params;
    std::string precond_name = "ldlt";
    std::string config;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--beta", params.beta, "total-variation weight");
        cmd->add_option("--c", params.c, "exact box penalty weight");
        cmd->add_option("--eps", params.eps, "quadratic penalty weight");
        cmd->add_option("--gamma", params.gamma, "dual l2 regularization");
        cmd->add_option("--alpha", params.alpha, "dual smoothing weight");
        cmd->add_option("--div-weight", params.div_weight,
                        "divergence-free projection weight");
        cmd->add_option("--threshold", params.threshold_t,
                        "binary cut level in (0,1)");
        cmd->add_option("--newton-reduction", params.newton_reduction,
                        "relative residual stopping factor");
        cmd->add_option("--newton-stall", params.newton_stall,
                        "successive-residual stall tolerance");
        cmd->add_option("--max-iters", params.newton_max_iters,
                        "Newton iteration cap");
        cmd->add_option("--pcg-tol", params.pcg_base_tol,
                        "base factor of the inner forcing tolerance");
        cmd->add_option("--pcg-max-iters", params.pcg_max_iters,
                        "inner iteration cap");
        cmd->add_option("--precond", precond_name, "inner preconditioner")
            ->check(CLI::IsMember({"ldlt", "jacobi"}));
        cmd->add_option("--config", config,
                        "JSON file with solver parameters (flags win)");
    }

    // Applies config-file values for every parameter not set on the
    // command line, then resolves the preconditioner name.
    void finalize(const CLI::App* cmd) {
        if (!config.empty()) {
            std::ifstream in(config);
            if (!in) throw io_error(config + ": cannot open");
            json j;
            try {
                in >> j;
            } catch (const json::parse_error& e) {
                throw std::invalid_argument(config + ": " + e.what());
            }
            if (!j.is_object())
                throw std::invalid_argument(config +
                                            ": config must be a JSON object");
            for (const auto& [key, value] : j.items()) apply(cmd, key, value);
        }
        params.precond = precond_name == "jacobi"
                             ? SolverParams::Precond::jacobi
                             : SolverParams::Precond::ldlt;
        params.validate();
    }

private:
    void apply(const CLI::App* cmd, const std::string& key, const json& value) {
        const auto number = [&](const char* flag, double& target) {
            if (cmd->count(flag)) return;
            if (!value.is_number())
                throw std::invalid_argument("config key '" + key +
                                            "' must be a number");
            target = value.get<double>();
        };
        const auto integer = [&](const char* flag, int& target) {
            if (cmd->count(flag)) return;
            if (!value.is_number_integer())
                throw std::invalid_argument("config key '" + key +
                                            "' must be an integer");
            target = value.get<int>();
        };
        if (key == "beta") number("--beta", params.beta);
        else if (key == "c") number("--c", params.c);
        else if (key == "eps") number("--eps", params.eps);
        else if (key == "gamma") number("--gamma", params.gamma);
        else if (key == "alpha") number("--alpha", params.alpha);
        else if (key == "div_weight") number("--div-weight", params.div_weight);
        else if (key == "threshold") number("--threshold", params.threshold_t);
        else if (key == "newton_reduction")
            number("--newton-reduction", params.newton_reduction);
        else if (key == "newton_stall")
            number("--newton-stall", params.newton_stall);
        else if (key == "newton_max_iters")
            integer("--max-iters", params.newton_max_iters);
        else if (key == "pcg_base_tol") number("--pcg-tol", params.pcg_base_tol);
        else if (key == "pcg_max_iters")
            integer("--pcg-max-iters", params.pcg_max_iters);
        else if (key == "precond") {
            if (cmd->count("--precond")) return;
            if (!value.is_string() ||
                (value != "ldlt" && value != "jacobi"))
                throw std::invalid_argument(
                    "config key 'precond' must be \"ldlt\" or \"jacobi\"");
            precond_name = value.get<std::string>();
        } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
    }
};

struct IoOptions {
    std::string input;
    std::string out;
    std::string report;
    std::string residuals;
};

int run_denoise(const IoOptions& io, const SolverParams& p) {
    const ScalarField f = read_field(io.input);
    SolveReport rep;
    const ScalarField u = denoise_binary(f, p, &rep);
    write_field(io.out, u);
    write_residuals(io.residuals, rep);

    ScalarField g = f;
    for (double& v : g.values) v = 0.5 - v;
    json j = {{"schema_version", kSchemaVersion},
              {"command", "denoise"},
              {"input", io.input},
              {"output", io.out},
              {"grid", grid_json(f.grid)},
              {"params", params_json(p)},
              {"solve", solve_json(rep)},
              {"energy", primal_energy(u, g, p.beta)}};
    write_report(io.report, j);
    if (!rep.converged) {
        std::cerr << "error: solver did not converge within the iteration cap\n";
        return 3;
    }
    return 0;
}

int run_segment(const IoOptions& io, const std::string& u0_path,
                const SolverParams& p, int cap, double tol) {
    const ScalarField f = read_field(io.input);
    ScalarField init = u0_path.empty()
                           ? threshold(f, 0.5)
                           : threshold(read_field(u0_path), p.threshold_t);
    const SegmentationState st = chan_vese(f, p, init, cap, tol);
    write_field(io.out, st.u);
    write_residuals(io.residuals, st.last_solve);

    const ScalarField half = threshold(f, 0.5);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (st.u.values[i] == half.values[i]) ++agree;

    json j = {{"schema_version", kSchemaVersion},
              {"command", "segment"},
              {"input", io.input},
              {"output", io.out},
              {"grid", grid_json(f.grid)},
              {"params", params_json(p)},
              {"c1", st.c1},
              {"c2", st.c2},
              {"outer_iters", st.outer_iters},
              {"converged", st.converged},
              {"empty_phase", st.empty_phase_flagged},
              {"energy_history", st.energy_history},
              {"init_hash", init_hash({&init}, p.threshold_t)},
              {"input_agreement",
               static_cast<double>(agree) /
                   static_cast<double>(f.values.size())},
              {"solve", solve_json(st.last_solve)}};
    write_report(io.report, j);
    if (!st.converged) {
        std::cerr << "error: segmentation did not converge within "
                  << cap << " outer iterations\n";
        return 3;
    }
    return 0;
}

int run_label(const IoOptions& io, const std::string& prefix, std::size_t m,
              const SolverParams& p, int cap, double tol) {
    const ScalarField f = read_field(io.input);
    const LabelState st = multilabel(f, p, m, cap, tol);

    const std::string pc_path = prefix + "_pc.pgm";
    write_field(pc_path, st.piecewise_image);
    json outputs = json::array();
    outputs.push_back(pc_path);
    std::vector<const ScalarField*> inds;
    for (std::size_t i = 0; i < m; ++i) {
        const std::string path = prefix + "_u" + std::to_string(i) + ".pgm";
        write_field(path, st.indicators[i]);
        outputs.push_back(path);
        inds.push_back(&st.indicators[i]);
    }
    write_residuals(io.residuals, st.last_solve);

    json j = {{"schema_version", kSchemaVersion},
              {"command", "label"},
              {"input", io.input},
              {"outputs", outputs},
              {"grid", grid_json(f.grid)},
              {"params", params_json(p)},
              {"m", m},
              {"constants", st.constants},
              {"frozen_phases", st.frozen_phases},
              {"sweeps", st.sweeps},
              {"converged", st.converged},
              {"empty_phase", st.empty_phase_flagged},
              {"energy_history", st.energy_history},
              {"init_hash", init_hash(inds, p.threshold_t)},
              {"solve", solve_json(st.last_solve)}};
    write_report(io.report, j);
    if (!st.converged) {
        std::cerr << "error: labeling did not converge within " << cap
                  << " sweeps\n";
        return 3;
    }
    return 0;
}

int run_solve(const IoOptions& io, bool volume_set, double volume,
              bool voltol_set, double vol_tol, const SolverParams& p) {
    const ScalarField g = read_field(io.input);

    if (volume_set) {
        if (!io.residuals.empty())
            throw std::invalid_argument(
                "--residuals is not recorded in volume mode");
        if (!voltol_set) vol_tol = 0.5 * g.grid.cell_volume();
        const VolumeResult vr = solve_with_volume(g, p, volume, vol_tol);
        write_field(io.out, vr.u);
        json j = {{"schema_version", kSchemaVersion},
                  {"command", "solve"},
                  {"input", io.input},
                  {"output", io.out},
                  {"grid", grid_json(g.grid)},
                  {"params", params_json(p)},
                  {"volume_target", volume},
                  {"vol_tol", vol_tol},
                  {"multiplier", vr.multiplier},
                  {"achieved_volume", vr.achieved_volume},
                  {"bracket", {vr.bracket_lo, vr.bracket_hi}},
                  {"evaluations", vr.evaluations},
                  {"plateau", vr.plateau_limited},
                  {"energy", primal_energy(vr.u, g, p.beta)}};
        write_report(io.report, j);
        return 0;
    }

    const auto [q, rep] = solve(g, p);
    const ScalarField u = threshold(recover_u(q, g, p), p.threshold_t);
    write_field(io.out, u);
    write_residuals(io.residuals, rep);
    json j = {{"schema_version", kSchemaVersion},
              {"command", "solve"},
              {"input", io.input},
              {"output", io.out},
              {"grid", grid_json(g.grid)},
              {"params", params_json(p)},
              {"solve", solve_json(rep)},
              {"energy", primal_energy(u, g, p.beta)}};
    write_report(io.report, j);
    if (!rep.converged) {
        std::cerr << "error: solver did not converge within the iteration cap\n";
        return 3;
    }
    return 0;
}

int run_add_noise(const IoOptions& io, double level, std::uint64_t seed) {
    const ScalarField f = read_field(io.input);
    double sigma = 0.0;
    const ScalarField noisy = add_gaussian_noise(f, level, seed, &sigma);
    write_field(io.out, noisy);

    double fmin = f.values[0], fmax = f.values[0];
    for (double v : f.values) {
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
    }
    json j = {{"schema_version", kSchemaVersion},
              {"command", "add-noise"},
              {"input", io.input},
              {"output", io.out},
              {"grid", grid_json(f.grid)},
              {"level", level},
              {"seed", seed},
              {"sigma_target", level * (fmax - fmin)},
              {"sigma_empirical", sigma}};
    write_report(io.report, j);
    return 0;
}

int check_threads_env() {
    const char* env = std::getenv("TVRELAX_THREADS");
    if (!env) return 0;
    int threads = 0;
    const auto res = std::from_chars(env, env + std::strlen(env), threads);
    if (res.ec != std::errc{} || *res.ptr != '\0' || threads < 1) {
        std::cerr << "error: TVRELAX_THREADS must be a positive integer\n";
        return 1;
    }
    // All computation is single-threaded, so any cap >= 1 is honored.
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (int rc = check_threads_env()) return rc;

    CLI::App app{"Binary total-variation minimization via exact convex "
                 "relaxation and a dual semismooth Newton solver"};
    app.require_subcommand(1);

    IoOptions den_io;
    ParamOptions den_p;
    CLI::App* den = app.add_subcommand("denoise",
                                       "Binary denoising of an image");
    den->add_option("--input", den_io.input, "noisy image (PGM or CSV)")
        ->required();
    den->add_option("--out", den_io.out, "binary output image")->required();
    den->add_option("--report", den_io.report, "JSON report path");
    den->add_option("--residuals", den_io.residuals, "residual CSV path");
    den_p.add_to(den);

    IoOptions seg_io;
    ParamOptions seg_p;
    std::string seg_u0;
    int seg_cap = 50;
    double seg_tol = 1e-4;
    CLI::App* seg = app.add_subcommand(
        "segment", "Two-phase piecewise-constant segmentation");
    seg->add_option("--input", seg_io.input, "input image")->required();
    seg->add_option("--out", seg_io.out, "binary phase image")->required();
    seg->add_option("--report", seg_io.report, "JSON report path");
    seg->add_option("--residuals", seg_io.residuals,
                    "residual CSV of the last inner solve");
    seg->add_option("--u0", seg_u0, "initialization image");
    seg->add_option("--outer-cap", seg_cap, "outer iteration cap");
    seg->add_option("--outer-tol", seg_tol, "relative l1 stopping tolerance");
    seg_p.add_to(seg);

    IoOptions lab_io;
    ParamOptions lab_p;
    std::string lab_prefix;
    std::size_t lab_m = 0;
    int lab_cap = 30;
    double lab_tol = 1e-4;
    CLI::App* lab = app.add_subcommand(
        "label", "2^M-phase labeling with M binary indicators");
    lab->add_option("--input", lab_io.input, "input image")->required();
    lab->add_option("--out-prefix", lab_prefix,
                    "prefix for <prefix>_pc.pgm and <prefix>_u<i>.pgm")
        ->required();
    lab->add_option("-m,--m", lab_m, "number of indicators (1..8)")
        ->required();
    lab->add_option("--report", lab_io.report, "JSON report path");
    lab->add_option("--residuals", lab_io.residuals,
                    "residual CSV of the last inner solve");
    lab->add_option("--sweep-cap", lab_cap, "sweep cap");
    lab->add_option("--outer-tol", lab_tol, "relative l1 stopping tolerance");
    lab_p.add_to(lab);

    IoOptions sol_io;
    ParamOptions sol_p;
    double sol_volume = 0.0, sol_voltol = 0.0;
    CLI::App* sol = app.add_subcommand(
        "solve", "Minimize <g,u> + beta*tv(u) over binary u for a raw g");
    sol->add_option("--input", sol_io.input, "g field (CSV or PGM)")
        ->required();
    sol->add_option("--out", sol_io.out, "binary output field")->required();
    sol->add_option("--report", sol_io.report, "JSON report path");
    sol->add_option("--residuals", sol_io.residuals, "residual CSV path");
    CLI::Option* vol_opt =
        sol->add_option("--volume", sol_volume, "target volume of u");
    CLI::Option* voltol_opt = sol->add_option(
        "--vol-tol", sol_voltol, "volume tolerance (default: half a cell)");
    sol_p.add_to(sol);

    IoOptions noi_io;
    double noi_level = 0.0;
    std::uint64_t noi_seed = 0;
    CLI::App* noi = app.add_subcommand(
        "add-noise", "Add seeded Gaussian noise scaled by the data range");
    noi->add_option("--input", noi_io.input, "clean image")->required();
    noi->add_option("--out", noi_io.out, "noisy output image")->required();
    noi->add_option("--report", noi_io.report, "JSON report path");
    noi->add_option("--level", noi_level, "sigma as a fraction of the range")
        ->required();
    noi->add_option("--seed", noi_seed, "RNG seed")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(den)) {
            den_p.finalize(den);
            return run_denoise(den_io, den_p.params);
        }
        if (app.got_subcommand(seg)) {
            seg_p.finalize(seg);
            return run_segment(seg_io, seg_u0, seg_p.params, seg_cap, seg_tol);
        }
        if (app.got_subcommand(lab)) {
            lab_p.finalize(lab);
            return run_label(lab_io, lab_prefix, lab_m, lab_p.params, lab_cap,
                             lab_tol);
        }
        if (app.got_subcommand(sol)) {
            sol_p.finalize(sol);
            return run_solve(sol_io, vol_opt->count() > 0, sol_volume,
                             voltol_opt->count() > 0, sol_voltol, sol_p.params);
        }
        if (app.got_subcommand(noi)) {
            return run_add_noise(noi_io, noi_level, noi_seed);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const solver_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
