#pragma once

#include "chanflow/actuation.hpp"
#include "chanflow/diagnostics.hpp"
#include "chanflow/fields.hpp"
#include "chanflow/solver.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace chanflow {

// Round-trip formatting used for every floating-point CSV field.
std::string format_real(double v);

std::vector<std::string> split_csv_line(const std::string& line);

void write_snapshot(const std::filesystem::path& path, const FlowState& state, const EquilibriumProfile& profile);
FlowState read_snapshot(const std::filesystem::path& path, const Grid& grid);

struct TraceRow {
    int step = 0;
    double t = 0.0;
    double E = 0.0;
    double bound = 0.0;
    double coupling = 0.0;
    double beta = 0.0;
    double Gamma = 0.0;
    double q = 0.0;
    double discriminant = 0.0;
    double Psi = 0.0;
    double psi = 0.0;
    double solve_residual = 0.0;
};

extern const char* const kTraceHeader;

TraceRow make_trace_row(const Trajectory& traj, std::size_t n, double alpha);
std::string trace_line(const TraceRow& row, bool has_control);
std::vector<TraceRow> read_trace(const std::filesystem::path& path);

void write_identity_report(const std::filesystem::path& path, const IdentityReport& report);
void write_decay_report(const std::filesystem::path& path, const DecayReport& report);
void write_rate_report(const std::filesystem::path& path, const std::vector<RateEntry>& entries);
void write_moment_report(const std::filesystem::path& path, const MomentReport& report);

ActuationShape read_shape_csv(const std::filesystem::path& path);

} // namespace chanflow
