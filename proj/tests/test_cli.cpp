#include "pacon/csv.hpp"
#include "pacon/svg.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PACON_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const std::string kLeanFlags =
    " --rk-steps 512 --measure-cap 3 --max-steps 300 --ds-max 0.02 --profiles-at 0.1";

}  // namespace

TEST_CASE("cli: trace artifacts, determinism, verify, plot") {
    const fs::path out1 = fresh_dir("pacon_cli_out1");
    const fs::path out2 = fresh_dir("pacon_cli_out2");

    const std::string trace_cmd =
        "trace --problem shooting --exponent 5" + kLeanFlags + " --out ";
    REQUIRE(run_cli(trace_cmd + out1.string()) == 0);
    REQUIRE(run_cli(trace_cmd + out2.string()) == 0);

    const fs::path run_dir = out1 / "shooting_a5";
    REQUIRE(fs::exists(run_dir / "branch.csv"));
    REQUIRE(fs::exists(run_dir / "events.csv"));

    // Byte-identical artifacts across identical invocations.
    CHECK(slurp(run_dir / "branch.csv") == slurp(out2 / "shooting_a5" / "branch.csv"));
    CHECK(slurp(run_dir / "events.csv") == slurp(out2 / "shooting_a5" / "events.csv"));

    // Exact schema and residual column discipline.
    const auto rows = pacon::read_branch_csv(run_dir / "branch.csv");
    REQUIRE(!rows.empty());
    for (const auto& row : rows) CHECK(row.residual_norm <= 1e-10);
    {
        std::ifstream in(run_dir / "branch.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == pacon::kBranchCsvHeader);
    }

    // Exactly one fold, classified quadratic, near the analytic location.
    const std::string events = slurp(run_dir / "events.csv");
    CHECK(events.find("fold,0.1193662") != std::string::npos);
    CHECK(events.find("quadratic_fold") != std::string::npos);
    CHECK(events.find("branch_point") == std::string::npos);
    CHECK(events.find("step_failure") == std::string::npos);

    // Two profiles at rho = 0.1; upper solution dominates the lower one.
    const auto lower = pacon::read_profile_csv(run_dir / "profile_rho0.1_sol0.csv");
    const auto upper = pacon::read_profile_csv(run_dir / "profile_rho0.1_sol1.csv");
    CHECK(upper.front()[1] > lower.front()[1]);
    double lower_sup = 0.0, upper_sup = 0.0;
    for (const auto& [r, psi] : lower) lower_sup = std::max(lower_sup, std::abs(psi));
    for (const auto& [r, psi] : upper) upper_sup = std::max(upper_sup, std::abs(psi));
    CHECK(upper_sup > lower_sup);

    // verify: accepts the run it wrote, rejects an absurd tolerance.
    const std::string branch = (run_dir / "branch.csv").string();
    CHECK(run_cli("verify --in " + branch + " --exponent 5 --rk-steps 512") == 0);
    CHECK(run_cli("verify --in " + branch +
                  " --exponent 5 --rk-steps 512 --newton-tol 1e-30") == 1);
    CHECK(run_cli("verify --in " + (out1 / "nonexistent.csv").string()) == 2);

    // plot: SVGs from CSVs, byte-deterministic.
    REQUIRE(run_cli("plot --out " + out1.string()) == 0);
    const fs::path svg = out1 / "bifurcation_shooting.svg";
    REQUIRE(fs::exists(svg));
    const std::string first = slurp(svg);
    CHECK(first.rfind("<svg", 0) == 0);
    REQUIRE(run_cli("plot --out " + out1.string()) == 0);
    CHECK(slurp(svg) == first);
    CHECK(fs::exists(run_dir / "profile_rho0.1.svg"));
}

TEST_CASE("cli: no fold for a = 1 on the default window") {
    const fs::path out = fresh_dir("pacon_cli_a1");
    REQUIRE(run_cli("trace --problem shooting --exponent 1 --rk-steps 128 --max-steps 500 "
                    "--measure-cap 25 --lambda-max 1.4 --profiles-at 0.3 --out " +
                    out.string()) == 0);
    const std::string events = slurp(out / "shooting_a1" / "events.csv");
    CHECK(events.find("\nfold,") == std::string::npos);  // no fold rows
    CHECK(events.find("parameter_exit") != std::string::npos);
}

TEST_CASE("cli: fd realization writes the same artifact set") {
    const fs::path out = fresh_dir("pacon_cli_fd");
    REQUIRE(run_cli("trace --problem fd --exponent 5 --mesh 48 --measure-cap 3 --max-steps 200 "
                    "--ds-max 0.02 --profiles-at 0.1 --out " +
                    out.string()) == 0);
    const fs::path run_dir = out / "fd_a5";
    const std::string events = slurp(run_dir / "events.csv");
    CHECK(events.find("\nfold,") != std::string::npos);
    CHECK(events.find("quadratic_fold") != std::string::npos);
    // FD profiles sample the mesh nodes.
    const auto profile = pacon::read_profile_csv(run_dir / "profile_rho0.1_sol0.csv");
    CHECK(profile.size() == 49);
    CHECK(profile.back()[0] == 1.0);
    CHECK(profile.back()[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cli: a step failure deep in the supercritical snake exits nonzero") {
    // a = 10 is past the critical exponent: its branch folds repeatedly and
    // eventually outruns what the fixed-step integrator can resolve; the run
    // must report that honestly.
    const fs::path out = fresh_dir("pacon_cli_a10");
    CHECK(run_cli("trace --problem shooting --exponent 10 --rk-steps 256 --measure-cap 20 "
                  "--max-steps 900 --profiles-at 0.02 --out " +
                  out.string()) == 1);
    const std::string events = slurp(out / "shooting_a10" / "events.csv");
    CHECK(events.find("step_failure") != std::string::npos);
    CHECK(events.find("\nfold,") != std::string::npos);  // the first folds are still found
}

TEST_CASE("cli: usage and config errors exit with 2") {
    CHECK(run_cli("trace --problem bogus") == 2);
    CHECK(run_cli("plot --out /nonexistent/pacon/dir") == 2);
    CHECK(run_cli("trace --problem shooting --exponent 5 --ds0 0 --out /tmp/pacon_cfgerr") == 2);
    CHECK(run_cli("") == 2);  // missing subcommand
}

TEST_CASE("svg: rendering with no data still draws the axes") {
    const std::string svg = pacon::render_line_plot("empty", "x", "y", {});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("<rect") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") == std::string::npos);
}

TEST_CASE("cli: four-exponent overlay carries a polyline and legend entry per exponent") {
    const fs::path out = fresh_dir("pacon_cli_overlay");
    REQUIRE(run_cli("trace --problem shooting --exponent 1,1.25,5,10 --rk-steps 128 "
                    "--measure-cap 2 --max-steps 120 --ds-max 0.05 --profiles-at 0.1 --svg --out " +
                    out.string()) == 0);
    const std::string svg = slurp(out / "bifurcation_shooting.svg");
    size_t polylines = 0;
    for (size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) {
        ++polylines;
    }
    CHECK(polylines == 4);
    for (const char* label : {">a=1<", ">a=1.25<", ">a=5<", ">a=10<"}) {
        CHECK(svg.find(label) != std::string::npos);
    }
}

TEST_CASE("cli: compare cross-validates the two realizations") {
    const std::string base =
        "compare --exponent 5 --rk-steps 512 --measure-cap 3 --ds-max 0.02 --max-steps 400 "
        "--profiles-at 0.1 --mesh ";
    CHECK(run_cli(base + "100") == 0);
    // A degenerate mesh trips the default 2e-3 tolerance without crashing.
    CHECK(run_cli(base + "16") == 1);
}

TEST_CASE("cli: config file is read and flags override it") {
    const fs::path dir = fresh_dir("pacon_cli_cfg");
    const fs::path cfg = dir / "run.cfg";
    {
        std::ofstream out(cfg);
        out << "trace.rk-steps=512\ntrace.measure-cap=3\ntrace.max-steps=300\n"
               "trace.ds-max=0.02\ntrace.exponent=5\n";
    }
    REQUIRE(run_cli("trace --problem shooting --config " + cfg.string() + " --profiles-at 0.1 --out " +
                    (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "shooting_a5" / "events.csv"));
    CHECK(!fs::exists(dir / "out" / "shooting_a1"));  // config exponent replaced the default list
    // Flag overrides the file: exponent 10 produces its own run directory.
    REQUIRE(run_cli("trace --problem shooting --config " + cfg.string() +
                    " --exponent 10 --profiles-at 0.02 --out " + (dir / "out10").string()) == 0);
    CHECK(fs::exists(dir / "out10" / "shooting_a10" / "events.csv"));
    CHECK(!fs::exists(dir / "out10" / "shooting_a5"));
}
