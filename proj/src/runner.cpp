#include "pacon/runner.hpp"

#include "pacon/csv.hpp"
#include "pacon/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <map>

namespace pacon {

namespace {

namespace fs = std::filesystem;

std::string tag(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

/// Linear interpolation of a recorded (r, psi) profile at radius r.
double interpolate_profile(const std::vector<std::array<double, 2>>& profile, double r) {
    if (profile.empty()) return 0.0;
    if (r <= profile.front()[0]) return profile.front()[1];
    if (r >= profile.back()[0]) return profile.back()[1];
    const auto it = std::lower_bound(profile.begin(), profile.end(), r,
                                     [](const auto& row, double v) { return row[0] < v; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (r - lo[0]) / (hi[0] - lo[0]);
    return (1.0 - w) * lo[1] + w * hi[1];
}

std::vector<std::array<double, 2>> solution_profile(const RunConfig& cfg, double exponent,
                                                    Realization which, const SolutionPoint& pt) {
    if (which == Realization::Shooting) {
        return shoot_profile(pt.u(0), pt.lambda, cfg.hamiltonian(exponent));
    }
    std::vector<std::array<double, 2>> profile(pt.u.size());
    const RadialMesh mesh(cfg.mesh_m);
    for (int j = 0; j <= cfg.mesh_m; ++j) profile[j] = {mesh.node(j), pt.u(j)};
    return profile;
}

SolutionPoint start_point(const ProblemDefinition& problem) {
    return evaluate_point(problem, Vector::Ones(problem.state_dim), 0.0);
}

Branch trace_problem(const RunConfig& cfg, const ProblemDefinition& problem) {
    return trace_branch(problem, start_point(problem), cfg.continuation());
}

std::vector<const Event*> fold_events(const Branch& branch) {
    std::vector<const Event*> folds;
    for (const Event& ev : branch.events) {
        if (ev.kind == EventKind::Fold) folds.push_back(&ev);
    }
    return folds;
}

void write_svgs(const fs::path& dir, const RunConfig& cfg, const TraceOutcome& outcome,
                Realization which);

}  // namespace

const char* to_string(Realization r) {
    return r == Realization::Shooting ? "shooting" : "fd";
}

void RunConfig::validate() const {
    continuation().validate();
    if (exponents.empty()) throw std::invalid_argument("RunConfig: empty exponent list");
    for (double a : exponents) hamiltonian(a).validate();
    for (double r : profile_rhos) {
        if (!(r >= lambda_min && r <= lambda_max)) {
            throw std::invalid_argument("RunConfig: profile rho outside the lambda window");
        }
    }
    if (!(compare_tol > 0.0)) throw std::invalid_argument("RunConfig: compare_tol must be > 0");
}

ContinuationSettings RunConfig::continuation() const {
    ContinuationSettings s;
    s.ds0 = ds0;
    s.ds_min = ds_min;
    s.ds_max = ds_max;
    s.newton_tol = newton_tol;
    s.newton_max_iter = newton_max_iter;
    s.max_steps = max_steps;
    s.lambda_min = lambda_min;
    s.lambda_max = lambda_max;
    s.fold_tol = fold_tol;
    s.measure_cap = measure_cap;
    return s;
}

HamiltonianConfig RunConfig::hamiltonian(double exponent) const {
    HamiltonianConfig h;
    h.exponent = exponent;
    h.mesh_m = mesh_m;
    h.rk_steps = rk_steps;
    h.rho_range = {std::max(0.0, lambda_min), lambda_max};
    return h;
}

ProblemDefinition make_problem(const RunConfig& cfg, double exponent, Realization which) {
    return which == Realization::Shooting ? shooting_problem(cfg.hamiltonian(exponent))
                                          : fd_problem(cfg.hamiltonian(exponent));
}

TraceOutcome trace_exponent(const RunConfig& cfg, double exponent) {
    const ProblemDefinition problem = make_problem(cfg, exponent, cfg.realization);
    TraceOutcome outcome;
    outcome.exponent = exponent;
    outcome.branch = trace_problem(cfg, problem);
    outcome.directory =
        cfg.output_dir / (std::string(to_string(cfg.realization)) + "_a" + tag(exponent));
    fs::create_directories(outcome.directory);
    write_branch_csv(outcome.directory / "branch.csv", problem, outcome.branch);
    write_events_csv(outcome.directory / "events.csv", outcome.branch);

    for (double rho : cfg.profile_rhos) {
        const auto solutions =
            solutions_at_lambda(problem, outcome.branch, rho, cfg.continuation());
        for (size_t k = 0; k < solutions.size(); ++k) {
            const auto profile = solution_profile(cfg, exponent, cfg.realization, solutions[k]);
            write_profile_csv(outcome.directory / ("profile_rho" + tag(rho) + "_sol" +
                                                   std::to_string(k) + ".csv"),
                              profile);
        }
    }
    if (cfg.emit_svg) write_svgs(outcome.directory, cfg, outcome, cfg.realization);
    return outcome;
}

namespace {

void write_svgs(const fs::path& dir, const RunConfig& cfg, const TraceOutcome& outcome,
                Realization which) {
    (void)which;
    for (double rho : cfg.profile_rhos) {
        std::vector<PlotSeries> series;
        for (int k = 0;; ++k) {
            const fs::path p = dir / ("profile_rho" + tag(rho) + "_sol" + std::to_string(k) + ".csv");
            if (!fs::exists(p)) break;
            series.push_back({"solution " + std::to_string(k), read_profile_csv(p)});
        }
        if (series.empty()) continue;
        std::ofstream svg(dir / ("profiles_rho" + tag(rho) + ".svg"));
        svg << render_line_plot("Solutions at rho=" + tag(rho) + ", a=" + tag(outcome.exponent),
                                "r", "psi", series);
    }
}

void write_overlay_svg(const fs::path& out_dir, const std::string& realization_name,
                       const std::vector<std::pair<double, fs::path>>& branch_csvs) {
    std::vector<PlotSeries> series;
    for (const auto& [exponent, path] : branch_csvs) {
        PlotSeries s;
        s.label = "a=" + tag(exponent);
        for (const BranchCsvRow& row : read_branch_csv(path)) {
            s.points.push_back({row.lambda, row.measure_center});
        }
        series.push_back(std::move(s));
    }
    std::ofstream svg(out_dir / ("bifurcation_" + realization_name + ".svg"));
    svg << render_line_plot("Bifurcation diagram (" + realization_name + ")", "rho",
                            "psi(0)", series);
}

int print_summary(const RunConfig& cfg, std::vector<TraceOutcome>& outcomes) {
    std::sort(outcomes.begin(), outcomes.end(),
              [](const TraceOutcome& a, const TraceOutcome& b) { return a.exponent < b.exponent; });
    int status = 0;
    for (const TraceOutcome& outcome : outcomes) {
        const Branch& br = outcome.branch;
        std::cout << to_string(cfg.realization) << " a=" << tag(outcome.exponent) << ": "
                  << br.points.size() << " points, stop=" << to_string(br.stop) << "\n";
        for (const Event& ev : br.events) {
            std::cout << "  event " << to_string(ev.kind) << " at rho="
                      << format_double(ev.location.lambda)
                      << " measure=" << format_double(ev.location.measure);
            if (ev.report) {
                std::cout << " null_dim=" << ev.report->null_dim
                          << " c2=" << format_double(ev.report->c2_estimate) << " class="
                          << to_string(ev.report->classification);
            }
            std::cout << "\n";
            if (ev.kind == EventKind::StepFailure) status = 1;
        }
        if (br.stop == StopReason::StepFailure) status = 1;
    }
    return status;
}

}  // namespace

int run_trace(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);

    std::vector<std::future<TraceOutcome>> futures;
    futures.reserve(cfg.exponents.size());
    for (double a : cfg.exponents) {
        futures.push_back(
            std::async(std::launch::async, [&cfg, a]() { return trace_exponent(cfg, a); }));
    }
    std::vector<TraceOutcome> outcomes;
    outcomes.reserve(futures.size());
    for (auto& f : futures) outcomes.push_back(f.get());

    const int status = print_summary(cfg, outcomes);
    if (cfg.emit_svg) {
        std::vector<std::pair<double, fs::path>> csvs;
        for (const TraceOutcome& o : outcomes) csvs.emplace_back(o.exponent, o.directory / "branch.csv");
        write_overlay_svg(cfg.output_dir, to_string(cfg.realization), csvs);
    }
    return status;
}

int run_compare(const RunConfig& cfg) {
    cfg.validate();
    int status = 0;
    for (double a : cfg.exponents) {
        const ProblemDefinition shoot_p = make_problem(cfg, a, Realization::Shooting);
        const ProblemDefinition fd_p = make_problem(cfg, a, Realization::Fd);
        const Branch shoot_br = trace_problem(cfg, shoot_p);
        const Branch fd_br = trace_problem(cfg, fd_p);
        const auto shoot_folds = fold_events(shoot_br);
        const auto fd_folds = fold_events(fd_br);

        std::cout << "compare a=" << tag(a) << ": shooting folds=" << shoot_folds.size()
                  << " fd folds=" << fd_folds.size() << "\n";
        if (shoot_folds.size() != fd_folds.size()) {
            std::cout << "  FAIL: realizations disagree on fold count\n";
            status = 1;
            continue;
        }
        for (size_t i = 0; i < shoot_folds.size(); ++i) {
            const double diff =
                std::abs(shoot_folds[i]->location.lambda - fd_folds[i]->location.lambda);
            std::cout << "  |rho_c(shooting) - rho_c(fd)| = " << format_double(diff)
                      << (diff <= cfg.compare_tol ? "  ok" : "  FAIL") << "\n";
            if (diff > cfg.compare_tol) status = 1;
        }

        for (double rho : cfg.profile_rhos) {
            const auto s_sol = solutions_at_lambda(shoot_p, shoot_br, rho, cfg.continuation());
            const auto f_sol = solutions_at_lambda(fd_p, fd_br, rho, cfg.continuation());
            if (s_sol.size() != f_sol.size()) {
                std::cout << "  rho=" << tag(rho) << " FAIL: solution count mismatch ("
                          << s_sol.size() << " vs " << f_sol.size() << ")\n";
                status = 1;
                continue;
            }
            const RadialMesh mesh(cfg.mesh_m);
            for (size_t k = 0; k < s_sol.size(); ++k) {
                const auto sp = solution_profile(cfg, a, Realization::Shooting, s_sol[k]);
                double worst = 0.0;
                for (int j = 0; j <= cfg.mesh_m; ++j) {
                    worst = std::max(worst,
                                     std::abs(interpolate_profile(sp, mesh.node(j)) - f_sol[k].u(j)));
                }
                std::cout << "  rho=" << tag(rho) << " solution " << k
                          << ": max profile discrepancy = " << format_double(worst)
                          << (worst <= cfg.compare_tol ? "  ok" : "  FAIL") << "\n";
                if (worst > cfg.compare_tol) status = 1;
            }
        }
    }
    return status;
}

int run_plot(const RunConfig& cfg) {
    try {
        std::map<std::string, std::vector<std::pair<double, fs::path>>> by_realization;
        if (!fs::exists(cfg.output_dir)) throw std::runtime_error("no such directory: " + cfg.output_dir.string());
        for (const auto& entry : fs::directory_iterator(cfg.output_dir)) {
            if (!entry.is_directory()) continue;
            const std::string name = entry.path().filename().string();
            const auto sep = name.rfind("_a");
            if (sep == std::string::npos) continue;
            const fs::path branch = entry.path() / "branch.csv";
            if (!fs::exists(branch)) continue;
            by_realization[name.substr(0, sep)].emplace_back(std::stod(name.substr(sep + 2)), branch);

            // Profile plots alongside their CSVs.
            std::map<std::string, std::vector<PlotSeries>> profile_groups;
            for (const auto& f : fs::directory_iterator(entry.path())) {
                const std::string fname = f.path().filename().string();
                if (fname.rfind("profile_", 0) != 0 || f.path().extension() != ".csv") continue;
                const auto sol = fname.rfind("_sol");
                const std::string group = fname.substr(0, sol == std::string::npos ? fname.size() : sol);
                profile_groups[group].push_back(
                    {fname.substr(0, fname.size() - 4), read_profile_csv(f.path())});
            }
            for (auto& [group, series] : profile_groups) {
                std::sort(series.begin(), series.end(),
                          [](const PlotSeries& a, const PlotSeries& b) { return a.label < b.label; });
                std::ofstream svg(entry.path() / (group + ".svg"));
                svg << render_line_plot(name + " " + group, "r", "psi", series);
            }
        }
        for (auto& [realization, csvs] : by_realization) {
            std::sort(csvs.begin(), csvs.end());
            write_overlay_svg(cfg.output_dir, realization, csvs);
            std::cout << "wrote " << (cfg.output_dir / ("bifurcation_" + realization + ".svg")).string()
                      << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "plot: " << e.what() << "\n";
        return 2;
    }
}

int run_verify(const std::filesystem::path& branch_csv, double exponent, int rk_steps,
               double newton_tol) {
    std::vector<BranchCsvRow> rows;
    try {
        rows = read_branch_csv(branch_csv);
    } catch (const std::exception& e) {
        std::cerr << "verify: " << e.what() << "\n";
        return 2;
    }
    HamiltonianConfig h;
    h.exponent = exponent;
    h.rk_steps = rk_steps;
    int failures = 0;
    for (const BranchCsvRow& row : rows) {
        double residual = 0.0;
        try {
            residual = std::abs(shoot(row.measure_center, row.lambda, h).boundary_mismatch);
        } catch (const std::exception&) {
            residual = std::numeric_limits<double>::infinity();
        }
        const bool ok = residual <= newton_tol && row.residual_norm <= newton_tol;
        if (!ok) {
            ++failures;
            std::cout << "step " << row.step << ": |F| = " << format_double(residual)
                      << " stored = " << format_double(row.residual_norm) << "  FAIL\n";
        }
    }
    std::cout << "verify: " << rows.size() << " rows, " << failures << " failures\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace pacon
