// pacon: pseudo-arclength continuation of the reduced Hamiltonian constraint.
//
// Subcommands: trace, compare, plot, verify. All runs are deterministic; see
// README.md for the CSV schemas and examples.

#include "pacon/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

void add_run_options(CLI::App* cmd, pacon::RunConfig& cfg, std::string& problem,
                     std::string& out_dir) {
    cmd->add_option("--problem", problem, "Realization to drive: shooting|fd")
        ->check(CLI::IsMember({"shooting", "fd"}))
        ->capture_default_str();
    cmd->add_option("--exponent", cfg.exponents, "Nonlinearity exponents a (list)")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--mesh", cfg.mesh_m, "FD mesh segments M")->capture_default_str();
    cmd->add_option("--rk-steps", cfg.rk_steps, "Shooting RK4 steps")->capture_default_str();
    cmd->add_option("--ds0", cfg.ds0, "Initial arclength step")->capture_default_str();
    cmd->add_option("--ds-min", cfg.ds_min, "Minimum arclength step")->capture_default_str();
    cmd->add_option("--ds-max", cfg.ds_max, "Maximum arclength step")->capture_default_str();
    cmd->add_option("--newton-tol", cfg.newton_tol, "Newton tolerance (inf-norm)")
        ->capture_default_str();
    cmd->add_option("--max-steps", cfg.max_steps, "Maximum accepted steps per branch")
        ->capture_default_str();
    cmd->add_option("--lambda-min", cfg.lambda_min, "Lower end of the rho window")
        ->capture_default_str();
    cmd->add_option("--lambda-max", cfg.lambda_max, "Upper end of the rho window")
        ->capture_default_str();
    cmd->add_option("--fold-tol", cfg.fold_tol, "|lambda_dot| tolerance at refined folds")
        ->capture_default_str();
    cmd->add_option("--measure-cap", cfg.measure_cap, "Stop when |psi(0)| exceeds this")
        ->capture_default_str();
    cmd->add_option("--profiles-at", cfg.profile_rhos, "Export solution profiles at these rho")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    cmd->fallthrough();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical continuation of the reduced Hamiltonian constraint"};
    app.require_subcommand(1);
    // Flat key=value config file with subcommand-qualified keys
    // (e.g. trace.rk-steps=2048); command-line flags override it.
    app.set_config("--config", "", "Flat key=value config file (flags override)");

    pacon::RunConfig cfg;
    std::string problem = "shooting";
    std::string out_dir = "out";

    CLI::App* trace = app.add_subcommand("trace", "trace branches and export CSV artifacts");
    add_run_options(trace, cfg, problem, out_dir);
    bool svg = false;
    trace->add_flag("--svg", svg, "also render SVG plots");

    CLI::App* compare = app.add_subcommand("compare", "cross-validate shooting against FD");
    pacon::RunConfig ccfg;
    ccfg.exponents = {5.0};
    std::string cproblem = "shooting";
    std::string cout_dir = "out";
    add_run_options(compare, ccfg, cproblem, cout_dir);
    compare->add_option("--tolerance", ccfg.compare_tol, "Allowed cross-realization disagreement")
        ->capture_default_str();

    CLI::App* plot = app.add_subcommand("plot", "render SVG plots from CSV artifacts");
    std::string plot_dir = "out";
    plot->add_option("--out", plot_dir, "Directory holding trace output")->capture_default_str();

    CLI::App* verify = app.add_subcommand("verify", "re-check residuals stored in a branch CSV");
    std::string verify_csv;
    double verify_exponent = 5.0;
    int verify_rk = 1024;
    double verify_tol = 1e-10;
    verify->add_option("--in", verify_csv, "Branch CSV written by trace (shooting runs)")
        ->required();
    verify->add_option("--exponent", verify_exponent, "Exponent the run used")
        ->capture_default_str();
    verify->add_option("--rk-steps", verify_rk, "RK4 steps the run used")->capture_default_str();
    verify->add_option("--newton-tol", verify_tol, "Tolerance the run used")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (trace->parsed()) {
            cfg.realization =
                problem == "fd" ? pacon::Realization::Fd : pacon::Realization::Shooting;
            cfg.output_dir = out_dir;
            cfg.emit_svg = svg;
            return pacon::run_trace(cfg);
        }
        if (compare->parsed()) {
            ccfg.output_dir = cout_dir;
            return pacon::run_compare(ccfg);
        }
        if (plot->parsed()) {
            pacon::RunConfig pcfg;
            pcfg.output_dir = plot_dir;
            return pacon::run_plot(pcfg);
        }
        if (verify->parsed()) {
            return pacon::run_verify(verify_csv, verify_exponent, verify_rk, verify_tol);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
