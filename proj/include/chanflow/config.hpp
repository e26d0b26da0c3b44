#pragma once

#include "chanflow/controller.hpp"
#include "chanflow/solver.hpp"

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace chanflow {

// Flat, typed experiment description. Every field maps to one dotted key of
// the text format, e.g. `geometry.nx = 12` or `control.mode = closed`.
struct ExperimentConfig {
    double Lx = 1.0;
    double Ly = 1.0;
    int nx = 12;
    int ny = 12;

    double R = 5.0e4;
    double a = 4.0 / 5.0e4;
    double b = 0.0;

    double c = 0.11;
    double dt = 0.2;
    int steps = 250;
    std::string solve_strategy = "least-squares";
    int oversampling = 2;
    int gauge_node = 0;

    std::string mode = "closed";
    double alpha = 1.0;
    double psi_max = std::numeric_limits<double>::infinity();
    int delay_steps = 1;
    std::string psi_sign = "energy-consistent";

    std::string shape_kind = "step";
    double theta = 1.0;
    double epsilon = 1.0 / 3.0;
    std::string shape_file;

    double wave_A = 0.1;
    double wave_omega = 6.283185307179586;
    double wave_c = 0.5;

    std::string ic_preset = "paper";
    std::string ic_file;

    std::string output_directory = "run";
    int snapshot_every = 0;

    bool operator==(const ExperimentConfig&) const = default;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

// Parses the key-value document, applies overrides in order, fills defaults and
// validates. Relative file paths are resolved against base_dir when it is set.
ExperimentConfig parse_config(const std::string& text, const ConfigOverrides& overrides = {},
                              const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path, const ConfigOverrides& overrides = {});
std::string serialize_config(const ExperimentConfig& cfg);

// Splits "key=value".
std::pair<std::string, std::string> split_assignment(const std::string& text);

const std::vector<std::string>& config_keys();

} // namespace chanflow
