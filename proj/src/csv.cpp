#include "pacon/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pacon {

std::string format_double(double x) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

void write_branch_csv(const std::filesystem::path& path, const ProblemDefinition& p,
                      const Branch& branch) {
    std::ofstream out = open_out(path);
    out << kBranchCsvHeader << "\n";
    // Events annotate the row of the last accepted point before detection.
    std::vector<std::string> labels(branch.points.size());
    for (const Event& ev : branch.events) {
        if (ev.at_point_index >= 0 && ev.at_point_index < static_cast<int>(labels.size())) {
            auto& slot = labels[ev.at_point_index];
            slot = slot.empty() ? to_string(ev.kind) : slot + ";" + to_string(ev.kind);
        }
    }
    for (size_t k = 0; k < branch.points.size(); ++k) {
        const SolutionPoint& pt = branch.points[k];
        out << k << ',' << format_double(pt.lambda) << ',' << format_double(pt.measure) << ','
            << format_double(p.measure2(pt.u, pt.lambda)) << ','
            << format_double(pt.residual_norm) << ','
            << format_double(branch.tangents[k].dlambda) << ',' << labels[k] << "\n";
    }
}

void write_events_csv(const std::filesystem::path& path, const Branch& branch) {
    std::ofstream out = open_out(path);
    out << kEventsCsvHeader << "\n";
    for (const Event& ev : branch.events) {
        out << to_string(ev.kind) << ',' << format_double(ev.location.lambda) << ','
            << format_double(ev.location.measure) << ',';
        if (ev.report) {
            const CriticalPointReport& r = *ev.report;
            out << r.null_dim << ',' << format_double(r.range_test_residual) << ','
                << format_double(r.c2_estimate) << ',' << r.fold_order << ','
                << to_string(r.classification);
        } else {
            out << ",,,,";
        }
        out << "\n";
    }
}

void write_profile_csv(const std::filesystem::path& path,
                       const std::vector<std::array<double, 2>>& profile) {
    std::ofstream out = open_out(path);
    out << "r,psi\n";
    for (const auto& [r, psi] : profile) {
        out << format_double(r) << ',' << format_double(psi) << "\n";
    }
}

std::vector<BranchCsvRow> read_branch_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kBranchCsvHeader) {
        throw std::runtime_error("malformed branch CSV (bad header): " + path.string());
    }
    std::vector<BranchCsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw std::runtime_error("malformed branch CSV row: " + path.string());
        BranchCsvRow row;
        row.step = std::stoi(f[0]);
        row.lambda = std::stod(f[1]);
        row.measure_center = std::stod(f[2]);
        row.measure_l2 = std::stod(f[3]);
        row.residual_norm = std::stod(f[4]);
        row.lambda_dot = std::stod(f[5]);
        row.event = f[6];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::array<double, 2>> read_profile_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "r,psi") {
        throw std::runtime_error("malformed profile CSV (bad header): " + path.string());
    }
    std::vector<std::array<double, 2>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 2) throw std::runtime_error("malformed profile CSV row: " + path.string());
        rows.push_back({std::stod(f[0]), std::stod(f[1])});
    }
    return rows;
}

}  // namespace pacon
