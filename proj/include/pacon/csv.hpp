#pragma once

#include "pacon/continuation.hpp"
#include "pacon/problem.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pacon {

/// Shortest round-trippable decimal form of x (%.17g fallback), identical
/// across runs of the same binary.
std::string format_double(double x);

struct BranchCsvRow {
    int step = 0;
    double lambda = 0.0;
    double measure_center = 0.0;
    double measure_l2 = 0.0;
    double residual_norm = 0.0;
    double lambda_dot = 0.0;
    std::string event;
};

inline constexpr const char* kBranchCsvHeader =
    "step,lambda,measure_center,measure_l2,residual_norm,lambda_dot,event";
inline constexpr const char* kEventsCsvHeader =
    "kind,lambda,measure_center,null_dim,range_residual,c2,fold_order,classification";

/// Branch CSV: one row per accepted point; the event column labels the step
/// at which an event was registered.
void write_branch_csv(const std::filesystem::path& path, const ProblemDefinition& p,
                      const Branch& branch);

/// Events CSV: one row per event; report columns are empty for events
/// without a critical-point report.
void write_events_csv(const std::filesystem::path& path, const Branch& branch);

/// Solution profile CSV with header "r,psi".
void write_profile_csv(const std::filesystem::path& path,
                       const std::vector<std::array<double, 2>>& profile);

/// Minimal reader for our own files. Throws std::runtime_error on a missing
/// file or a header mismatch.
std::vector<BranchCsvRow> read_branch_csv(const std::filesystem::path& path);
std::vector<std::array<double, 2>> read_profile_csv(const std::filesystem::path& path);

}  // namespace pacon
