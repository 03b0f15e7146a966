#pragma once

// Experiment orchestration: the cell -> corrector -> homogenize pipeline with
// persistent corrector caching, the plate and fine runs, and the three
// verification studies (shd, linearize, commute) plus unfolding diagnostics.
// Each study emits a CSV report and a pass/fail verdict for its gated
// thresholds. Execution is serial and deterministic regardless of the
// requested worker count; verify reports carry no timing columns so repeated
// runs are byte-identical.

#include "config.hpp"
#include "report.hpp"
#include "unfold.hpp"
#include "vtk.hpp"

#include <chrono>
#include <filesystem>
#include <optional>

namespace homplate {

/// Cell pipeline products reused by every study.
struct CellRun {
    CellMesh mesh;
    DofMap dofs;
    PhaseAssignment phases;
    CorrectorSet correctors;
    PlateTensor tensor;
    bool cache_hit = false;
};

inline CellRun run_cell_pipeline(const RunConfig& cfg, const std::string& cache_dir = "") {
    CellMesh mesh = build_cell_mesh(cfg.geometry, cfg.cell_resolution);
    DofMap dofs = periodic_dof_map(mesh);
    PhaseAssignment phases;
    phases.phases = config_hooke(cfg);
    phases.validate_coercive();

    const uint64_t key = corrector_cache_key(cfg);
    std::string cache_path;
    if (!cache_dir.empty()) {
        std::filesystem::create_directories(cache_dir);
        cache_path = cache_dir + "/correctors_" + hash_string(key) + ".bin";
    }

    std::optional<CorrectorSet> cached;
    if (!cache_path.empty()) cached = load_correctors(cache_path, key, dofs.n_dofs());

    CellRun run{std::move(mesh), std::move(dofs), std::move(phases), CorrectorSet{},
                PlateTensor{}, cached.has_value()};
    if (cached) {
        run.correctors = std::move(*cached);
    } else {
        const SpMat k = assemble_cell_stiffness(run.mesh, run.phases, run.dofs);
        run.correctors =
            solve_correctors(k, run.mesh, run.phases, run.dofs, cfg.cell_tolerance);
        if (!cache_path.empty()) save_correctors(cache_path, key, run.correctors);
    }
    run.tensor = assemble_plate_tensor(run.correctors, run.mesh, run.phases, run.dofs,
                                       cfg.normalize_by_material);
    return run;
}

inline PlateMesh make_plate_mesh(const RunConfig& cfg) {
    PlateMesh m;
    m.L1 = cfg.l1;
    m.L2 = cfg.l2;
    m.nx = cfg.plate_nx;
    m.ny = cfg.plate_ny;
    m.clamped = cfg.clamped;
    return m;
}

// --- coefficients file -------------------------------------------------------

inline void write_coefficients(const std::string& path, const RunConfig& cfg,
                               const PlateTensor& t) {
    CsvReport rep({"block", "row", "col", "value"}, config_hash(cfg));
    const std::array<std::pair<std::string, const Mat3*>, 3> blocks = {
        std::make_pair(std::string("A"), &t.A), {std::string("B"), &t.B},
        {std::string("C"), &t.C}};
    for (const auto& [name, m] : blocks)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                rep.add_row({name, std::to_string(i), std::to_string(j),
                             format_g17((*m)(i, j))});
    rep.add_row({"min_eigenvalue", "0", "0", format_g17(t.min_eigenvalue)});
    rep.write(path);
}

/// Read a coefficients CSV written by write_coefficients; refuses a file
/// produced under a different config hash.
inline PlateTensor read_coefficients(const std::string& path, const RunConfig& cfg) {
    std::ifstream in(path);
    if (!in)
        throw ReportError("coefficients file '" + path +
                          "' not found; run the cell subcommand first");
    const std::string want = hash_string(config_hash(cfg));
    PlateTensor t;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string hash, block, rs, cs, vs;
        std::getline(ls, hash, ',');
        std::getline(ls, block, ',');
        std::getline(ls, rs, ',');
        std::getline(ls, cs, ',');
        std::getline(ls, vs, ',');
        if (hash != want)
            throw ReportError("coefficients file '" + path +
                              "' was produced under a different config (hash " + hash +
                              ", expected " + want + ")");
        const double v = std::stod(vs);
        const int i = std::stoi(rs), j = std::stoi(cs);
        if (block == "A") t.A(i, j) = v;
        else if (block == "B") t.B(i, j) = v;
        else if (block == "C") t.C(i, j) = v;
        else if (block == "min_eigenvalue") t.min_eigenvalue = v;
    }
    return t;
}

// --- subcommand bodies -------------------------------------------------------

struct StudyOptions {
    std::string out_dir = ".";
    std::string cache_dir;
    bool emit_vtk = false;
    int workers = 1;  // accepted for interface stability; runs are serial
};

inline std::string out_path(const StudyOptions& opt, const std::string& name) {
    std::filesystem::create_directories(opt.out_dir);
    return opt.out_dir + "/" + name;
}

inline int cmd_cell(const RunConfig& cfg, const StudyOptions& opt) {
    const CellRun run = run_cell_pipeline(cfg, opt.cache_dir);
    write_coefficients(out_path(opt, "cell_coefficients.csv"), cfg, run.tensor);
    if (opt.emit_vtk)
        for (int f = 0; f < 6; ++f)
            write_vtk_cell(out_path(opt, "corrector_" + std::to_string(f) + ".vtk"),
                           run.mesh, run.dofs, run.correctors.fields[static_cast<size_t>(f)],
                           "corrector");
    return 0;
}

inline int cmd_plate(const RunConfig& cfg, const StudyOptions& opt) {
    const PlateTensor tensor =
        read_coefficients(out_path(opt, "cell_coefficients.csv"), cfg);
    const PlateMesh pmesh = make_plate_mesh(cfg);
    const PlateSolution sol =
        solve_plate(assemble_plate_system(pmesh, tensor, make_load(cfg)));
    CsvReport rep({"quantity", "value"}, config_hash(cfg));
    rep.add_row({"m_L", format_g17(sol.m_L)});
    rep.add_row({"load_term", format_g17(sol.load_term)});
    rep.add_row({"residual", format_g17(sol.residual)});
    rep.write(out_path(opt, "plate_report.csv"));
    if (opt.emit_vtk)
        write_vtk_plate(out_path(opt, "plate_solution.vtk"), pmesh, sol.dofs, "displacement");
    return 0;
}

inline int cmd_fine(const RunConfig& cfg, const StudyOptions& opt) {
    const CellRun cell = run_cell_pipeline(cfg, opt.cache_dir);
    CsvReport rep({"eps", "h", "a", "m_eps", "m_eps_rescaled", "j_eps_h_rescaled",
                   "residual", "dofs", "wall_time_s"},
                  config_hash(cfg));
    for (double eps : cfg.eps_ladder) {
        const auto t0 = std::chrono::steady_clock::now();
        FineMesh mesh(cell.mesh, eps, cfg.l1, cfg.l2, cfg.clamped);
        const SpMat k = assemble_fine_stiffness(mesh, cell.phases);
        const LoadSpec load = make_load(cfg);
        const FineSolution sol =
            solve_linear_fine(mesh, k, assemble_fine_load(mesh, load, cfg.a),
                              cfg.fine_tolerance);
        const Eigen::VectorXd full = mesh.expand(sol.u);
        const double scale = std::pow(eps, 2 * cfg.a + 3);
        if (opt.emit_vtk)
            write_vtk_fine(out_path(opt, "fine_eps_" + format_g17(eps) + ".vtk"), mesh,
                           full, "displacement");
        for (double h : cfg.h_ladder) {
            const ExtReal j = fine_nonlinear_energy(mesh, cell.phases, full, load, h, cfg.a);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rep.add_row({format_g17(eps), format_g17(h), std::to_string(cfg.a),
                         format_g17(sol.m_eps), format_g17(sol.m_eps / scale),
                         j.finite ? format_g17(j.value / (h * h * scale)) : "inadmissible",
                         format_g17(sol.residual), std::to_string(sol.n_dofs),
                         format_g17(secs)});
        }
    }
    rep.write(out_path(opt, "fine_report.csv"));
    return 0;
}

// --- verification studies ----------------------------------------------------

struct StudyVerdict {
    bool pass = true;
    std::vector<std::string> failures;

    void gate(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failures.push_back(what);
        }
    }
};

/// m_eps / eps^{2a+3} against m_L across the eps-ladder; gated on a strictly
/// decreasing relative gap with the final gap below 0.2.
inline StudyVerdict verify_shd(const RunConfig& cfg, const StudyOptions& opt) {
    const CellRun cell = run_cell_pipeline(cfg, opt.cache_dir);
    const PlateMesh pmesh = make_plate_mesh(cfg);
    const LoadSpec load = make_load(cfg);
    const PlateSolution plate =
        solve_plate(assemble_plate_system(pmesh, cell.tensor, load));

    CsvReport rep({"eps", "m_eps_rescaled", "m_L", "rel_gap", "pass"}, config_hash(cfg));
    StudyVerdict verdict;
    std::vector<double> gaps;
    for (double eps : cfg.eps_ladder) {
        FineMesh mesh(cell.mesh, eps, cfg.l1, cfg.l2, cfg.clamped);
        const SpMat k = assemble_fine_stiffness(mesh, cell.phases);
        const FineSolution sol =
            solve_linear_fine(mesh, k, assemble_fine_load(mesh, load, cfg.a),
                              cfg.fine_tolerance);
        const double rescaled = sol.m_eps / std::pow(eps, 2 * cfg.a + 3);
        const double gap = std::abs(rescaled - plate.m_L) / std::abs(plate.m_L);
        const bool decreasing = gaps.empty() || gap < gaps.back();
        verdict.gate(decreasing, "relative gap not decreasing at eps=" + format_g17(eps));
        gaps.push_back(gap);
        rep.add_row({format_g17(eps), format_g17(rescaled), format_g17(plate.m_L),
                     format_g17(gap), decreasing ? "1" : "0"});
    }
    verdict.gate(!gaps.empty() && gaps.back() <= 0.2,
                 "final relative gap exceeds 0.2: " + format_g17(gaps.back()));
    rep.write(out_path(opt, "verify_shd.csv"));
    return verdict;
}

/// r(h) = J_{eps,h}(id + h u_eps)/h^2 - J^Lin across the h-ladder at each
/// eps; gated on log-log slope >= 0.9 and the final remainder below 1e-3
/// relative to |J^Lin|.
inline StudyVerdict verify_linearize(const RunConfig& cfg, const StudyOptions& opt) {
    const CellRun cell = run_cell_pipeline(cfg, opt.cache_dir);
    const LoadSpec load = make_load(cfg);

    CsvReport rep({"eps", "h", "r", "r_rel", "slope", "pass"}, config_hash(cfg));
    StudyVerdict verdict;
    for (double eps : cfg.eps_ladder) {
        FineMesh mesh(cell.mesh, eps, cfg.l1, cfg.l2, cfg.clamped);
        const SpMat k = assemble_fine_stiffness(mesh, cell.phases);
        const FineSolution sol =
            solve_linear_fine(mesh, k, assemble_fine_load(mesh, load, cfg.a),
                              cfg.fine_tolerance);
        std::vector<double> ladder = cfg.h_ladder;
        std::sort(ladder.begin(), ladder.end(), std::greater<>());
        const LinearizationReport lin =
            linearization_study(mesh, cell.phases, mesh.expand(sol.u), load, cfg.a, ladder);
        const double jl = std::abs(lin.j_lin);
        const double final_rel =
            jl > 0.0 ? std::abs(lin.rows.back().r) / jl
                     : std::abs(lin.rows.back().r);
        const bool ok = lin.slope >= 0.9 && final_rel <= 1e-3;
        verdict.gate(ok, "linearization gate failed at eps=" + format_g17(eps) +
                             " (slope=" + format_g17(lin.slope) +
                             ", final r_rel=" + format_g17(final_rel) + ")");
        for (const auto& row : lin.rows)
            rep.add_row({format_g17(eps), format_g17(row.h), format_g17(row.r),
                         format_g17(jl > 0.0 ? std::abs(row.r) / jl : std::abs(row.r)),
                         format_g17(lin.slope), ok ? "1" : "0"});
    }
    rep.write(out_path(opt, "verify_linearize.csv"));
    return verdict;
}

/// Route 1: h -> 0 first (linear fine solve), then the finest eps.
/// Route 2: joint recovery-ansatz evaluation at the matched (eps, h).
/// Gated on |route1 - route2| <= gap1 + gap2 (gaps to m_L) and on both
/// routes being admissible finite values.
inline StudyVerdict verify_commute(const RunConfig& cfg, const StudyOptions& opt) {
    const CellRun cell = run_cell_pipeline(cfg, opt.cache_dir);
    const PlateMesh pmesh = make_plate_mesh(cfg);
    const LoadSpec load = make_load(cfg);
    const PlateSolution plate =
        solve_plate(assemble_plate_system(pmesh, cell.tensor, load));

    const double eps = *std::min_element(cfg.eps_ladder.begin(), cfg.eps_ladder.end());
    const double h = *std::min_element(cfg.h_ladder.begin(), cfg.h_ladder.end());
    const double scale = std::pow(eps, 2 * cfg.a + 3);

    FineMesh mesh(cell.mesh, eps, cfg.l1, cfg.l2, cfg.clamped);
    const SpMat k = assemble_fine_stiffness(mesh, cell.phases);
    const FineSolution sol = solve_linear_fine(
        mesh, k, assemble_fine_load(mesh, load, cfg.a), cfg.fine_tolerance);
    const double route1 = sol.m_eps / scale;

    const Eigen::VectorXd v =
        recovery_displacement(mesh, pmesh, plate.dofs, cell.correctors, cell.dofs,
                              cfg.cutoff_cells, cfg.n_smoothing);
    const ExtReal j = fine_nonlinear_energy(mesh, cell.phases, v, load, h, cfg.a);

    StudyVerdict verdict;
    verdict.gate(j.finite, "recovery-ansatz deformation is inadmissible");
    const double route2 = j.finite ? j.value / (h * h * scale) : 0.0;
    const double gap1 = std::abs(route1 - plate.m_L);
    const double gap2 = std::abs(route2 - plate.m_L);
    const double diff = std::abs(route1 - route2);
    verdict.gate(j.finite && diff <= gap1 + gap2 + 1e-14 * std::abs(plate.m_L),
                 "route difference exceeds the sum of individual gaps");

    CsvReport rep({"eps", "h", "route_sequential", "route_joint", "m_L", "gap_sequential",
                   "gap_joint", "difference", "pass"},
                  config_hash(cfg));
    rep.add_row({format_g17(eps), format_g17(h), format_g17(route1), format_g17(route2),
                 format_g17(plate.m_L), format_g17(gap1), format_g17(gap2),
                 format_g17(diff), verdict.pass ? "1" : "0"});
    rep.write(out_path(opt, "verify_commute.csv"));
    return verdict;
}

inline StudyVerdict cmd_verify(const RunConfig& cfg, const StudyOptions& opt,
                               const std::string& study) {
    if (study == "shd") return verify_shd(cfg, opt);
    if (study == "linearize") return verify_linearize(cfg, opt);
    if (study == "commute") return verify_commute(cfg, opt);
    StudyVerdict v;
    v.gate(false, "unknown study '" + study + "' (expected shd, linearize or commute)");
    return v;
}

/// Unfolding diagnostics across the eps-ladder: discrete identities, the
/// Kirchhoff-Love scaling audit, and two-scale moments against the
/// reconstructed limit field.
inline StudyVerdict cmd_unfold_diag(const RunConfig& cfg, const StudyOptions& opt) {
    const CellRun cell = run_cell_pipeline(cfg, opt.cache_dir);
    const PlateMesh pmesh = make_plate_mesh(cfg);
    const LoadSpec load = make_load(cfg);
    const PlateSolution plate =
        solve_plate(assemble_plate_system(pmesh, cell.tensor, load));

    CsvReport rep({"eps", "residual_over_eps_strain", "korn_ratio", "moment_error_max",
                   "strong_error", "integration_identity", "gradient_identity", "pass"},
                  config_hash(cfg));
    StudyVerdict verdict;
    double prev_moment = std::numeric_limits<double>::infinity();
    for (double eps : cfg.eps_ladder) {
        FineMesh mesh(cell.mesh, eps, cfg.l1, cfg.l2, cfg.clamped);
        const SpMat k = assemble_fine_stiffness(mesh, cell.phases);
        const FineSolution sol =
            solve_linear_fine(mesh, k, assemble_fine_load(mesh, load, cfg.a),
                              cfg.fine_tolerance);
        const Eigen::VectorXd full = mesh.expand(sol.u);

        // discrete identities on the solution field
        const UnfoldedField uf = unfold_nodal(mesh, full, 3);
        const Eigen::VectorXd lhs = unfold_integral(uf, cell.mesh);
        const Eigen::VectorXd rhs = fine_nodal_integral(mesh, full, 3) / eps;
        const double int_err = (lhs - rhs).cwiseAbs().maxCoeff() /
                               (1.0 + rhs.cwiseAbs().maxCoeff());
        const double grad_err = unfold_gradient_identity(mesh, full, 3) /
                                (1.0 + fine_field_norms(mesh, full).gradient);
        verdict.gate(int_err <= 1e-12, "integration identity at eps=" + format_g17(eps));
        verdict.gate(grad_err <= 1e-12, "gradient identity at eps=" + format_g17(eps));

        const KLDecomposition kl = kl_decompose(mesh, full);
        const double res_scaled =
            kl.norm_strain > 0.0 ? kl.norm_residual / (eps * kl.norm_strain) : 0.0;
        const double korn =
            kl.norm_strain > 0.0 ? kl.norm_grad_residual / kl.norm_strain : 0.0;

        const TwoScaleErrorReport ts =
            two_scale_error(mesh, full, pmesh, plate.dofs, cell.correctors, cell.dofs);
        const bool moment_ok = ts.moment_error_max < prev_moment;
        verdict.gate(moment_ok, "dictionary moments not decreasing at eps=" + format_g17(eps));
        prev_moment = ts.moment_error_max;

        rep.add_row({format_g17(eps), format_g17(res_scaled), format_g17(korn),
                     format_g17(ts.moment_error_max), format_g17(ts.strong_error),
                     format_g17(int_err), format_g17(grad_err), moment_ok ? "1" : "0"});
    }
    rep.write(out_path(opt, "unfold_diagnostics.csv"));
    return verdict;
}

}  // namespace homplate
