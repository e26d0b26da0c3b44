#pragma once

#include "chanflow/config.hpp"
#include "chanflow/csv.hpp"
#include "chanflow/diagnostics.hpp"
#include "chanflow/solver.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace chanflow {

struct ExperimentSetup {
    Grid grid;
    EquilibriumProfile profile;
    SolverConfig solver;
    SimulationOptions options;
    FlowState initial;
    std::optional<ActuationShape> shape;
};

ExperimentSetup build_setup(const ExperimentConfig& cfg);
FlowState initial_state(const ExperimentConfig& cfg, const Grid& grid, const EquilibriumProfile& profile);

struct RunSummary {
    bool ok = true;
    int failed_step = -1;
    std::string message;
    int steps_completed = 0;
    double E_initial = 0.0;
    double E_final = 0.0;
    double fitted_rate = 0.0;
    int violations = 0;
    double max_ratio = 0.0;
    double residual_max = 0.0;
    double residual_mean = 0.0;
    double momentum_residual_max = 0.0;
    double condition_max = 0.0;
    int saturated_steps = 0;
};

struct RunArtifacts {
    std::filesystem::path directory;
    std::filesystem::path trace;
    std::filesystem::path summary_file;
    std::vector<std::filesystem::path> snapshots;
    RunSummary summary;
    std::optional<Trajectory> trajectory;
};

// Runs the configured simulation and writes config.cfg, trace.csv, snapshots,
// decay.csv, rate.csv, final.svg and summary.json into the output directory.
// A SolverFailure is rethrown after the partial outputs and a failed summary are written.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

struct Comparison {
    double ratio_final = 0.0;
    std::vector<double> ratios;
    double threshold = 0.2;
    bool pass = false;
};

Comparison compare_runs(const std::vector<TraceRow>& a, const std::vector<TraceRow>& b, double threshold = 0.2);
Comparison compare_runs(const RunArtifacts& a, const RunArtifacts& b, double threshold = 0.2);
void write_comparison(const std::filesystem::path& path, const Comparison& cmp);

enum class CheckKind { identities, decay, shape };

struct CheckOptions {
    double tol = 0.05;
    double psi = 0.8;
    std::string source = "manufactured";
    std::string trace;
    std::filesystem::path out;
};

struct CheckResult {
    bool passed = false;
    std::string first_failure;
    std::filesystem::path report;
};

CheckResult check_command(const ExperimentConfig& cfg, CheckKind which, const CheckOptions& options);

struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

struct SweepPoint {
    std::string name;
    ConfigOverrides overrides;
};

std::vector<SweepPoint> expand_sweep(const std::vector<SweepAxis>& axes);

struct SweepOutcome {
    SweepPoint point;
    int status = 0;
    std::string message;
    RunSummary summary;
};

// Runs every point of the cartesian product on `jobs` worker threads. Each point
// writes into <out>/<point name>/.
std::vector<SweepOutcome> run_sweep(const std::string& base_text, const std::string& base_dir,
                                    const ConfigOverrides& base_overrides, const std::vector<SweepAxis>& axes,
                                    const std::filesystem::path& out, int jobs);

} // namespace chanflow
