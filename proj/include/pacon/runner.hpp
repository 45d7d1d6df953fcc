#pragma once

#include "pacon/continuation.hpp"
#include "pacon/hamiltonian.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pacon {

/// Which realization of the Hamiltonian constraint a run drives.
enum class Realization { Shooting, Fd };

const char* to_string(Realization r);

/// Configuration of a scenario run. Fully deterministic: no seeds anywhere.
struct RunConfig {
    Realization realization = Realization::Shooting;
    std::vector<double> exponents{1.0, 1.25, 5.0, 10.0};
    int mesh_m = 200;
    int rk_steps = 1024;
    double ds0 = 0.01;
    double ds_min = 1e-6;
    double ds_max = 0.05;
    double newton_tol = 1e-10;
    int newton_max_iter = 20;
    int max_steps = 600;
    double lambda_min = -0.05;
    double lambda_max = 1.4;
    double fold_tol = 1e-8;
    double measure_cap = 20.0;
    std::vector<double> profile_rhos{0.1};
    std::filesystem::path output_dir = "out";
    bool emit_svg = false;
    double compare_tol = 2e-3;

    void validate() const;  // throws std::invalid_argument
    ContinuationSettings continuation() const;
    HamiltonianConfig hamiltonian(double exponent) const;
};

/// Problem for one exponent under the configured realization.
ProblemDefinition make_problem(const RunConfig& cfg, double exponent, Realization which);

/// Result of tracing one exponent from the exact start (psi = 1, rho = 0).
struct TraceOutcome {
    double exponent = 0.0;
    Branch branch;
    std::filesystem::path directory;  // where CSVs were written
};

/// Trace one exponent and write branch/events/profile CSVs under
/// out_dir/<realization>_a<exponent>/.
TraceOutcome trace_exponent(const RunConfig& cfg, double exponent);

/// `trace` subcommand: sweep all configured exponents (concurrently), write
/// CSV artifacts and optional SVGs, print a summary ordered by exponent.
/// Returns the process exit status (0 ok, 1 on any step failure).
int run_trace(const RunConfig& cfg);

/// `compare` subcommand: run shooting and FD on identical settings, report
/// fold-location and profile discrepancies, fail beyond cfg.compare_tol.
int run_compare(const RunConfig& cfg);

/// `plot` subcommand: read branch/profile CSVs under cfg.output_dir and
/// render SVG plots next to them. Returns 2 on malformed input.
int run_plot(const RunConfig& cfg);

/// `verify` subcommand: re-evaluate the shooting residual at every CSV row of
/// a previously written branch file and check it against newton_tol.
int run_verify(const std::filesystem::path& branch_csv, double exponent, int rk_steps,
               double newton_tol);

}  // namespace pacon
