// Command-line driver: cell, plate, fine, verify {shd|linearize|commute},
// unfold-diag. Exit code 0 iff every gated criterion of the invoked command
// passes.

#include <homplate/studies.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

int run_verdict(const homplate::StudyVerdict& v) {
    if (v.pass) {
        std::cout << "PASS\n";
        return 0;
    }
    for (const auto& f : v.failures) std::cout << "FAIL: " << f << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"homogenized thin-plate toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    homplate::StudyOptions opt;
    std::optional<uint64_t> seed_override;

    app.add_option("--config", config_path, "run configuration file (JSON)")->required();
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--workers", opt.workers,
                   "worker count (accepted; execution is serial and deterministic)");
    app.add_option("--seed", seed_override, "override the config RNG seed");
    app.add_option("--cache", opt.cache_dir, "corrector cache directory");
    app.add_flag("--emit-vtk", opt.emit_vtk, "write VTK field files");

    auto* c_cell = app.add_subcommand("cell", "homogenized coefficients from the cell");
    auto* c_plate = app.add_subcommand("plate", "limit plate problem (needs cell output)");
    auto* c_fine = app.add_subcommand("fine", "fine-scale energies over the ladders");
    auto* c_verify = app.add_subcommand("verify", "asymptotic verification study");
    std::string study;
    c_verify->add_option("study", study, "shd, linearize or commute")->required();
    auto* c_unfold = app.add_subcommand("unfold-diag", "unfolding diagnostics");

    CLI11_PARSE(app, argc, argv);

    try {
        homplate::RunConfig cfg = homplate::load_config(config_path);
        if (seed_override) {
            cfg.seed = *seed_override;
            homplate::validate_config(cfg);
        }
        if (c_cell->parsed()) return homplate::cmd_cell(cfg, opt);
        if (c_plate->parsed()) return homplate::cmd_plate(cfg, opt);
        if (c_fine->parsed()) return homplate::cmd_fine(cfg, opt);
        if (c_verify->parsed()) return run_verdict(homplate::cmd_verify(cfg, opt, study));
        if (c_unfold->parsed()) return run_verdict(homplate::cmd_unfold_diag(cfg, opt));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
