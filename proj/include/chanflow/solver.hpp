#pragma once

#include "chanflow/actuation.hpp"
#include "chanflow/controller.hpp"
#include "chanflow/fields.hpp"
#include "chanflow/rbf_basis.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace chanflow {

enum class SolveStrategy { least_squares, direct_square };

struct SolverConfig {
    Grid grid{12, 12, 1.0, 1.0};
    double c = 0.11;
    double dt = 0.2;
    EquilibriumProfile profile;
    SolveStrategy strategy = SolveStrategy::least_squares;
    int oversampling = 2;
    int gauge_node = 0;
};

SolverConfig make_solver_config(const Grid& grid, double c, double dt, const EquilibriumProfile& profile,
                                SolveStrategy strategy = SolveStrategy::least_squares, int oversampling = 2,
                                int gauge_node = 0);

// Unknowns are basis coefficients of the deviation fields, ordered u, v, p.
struct UnknownLayout {
    int n = 0;
    int u_offset() const { return 0; }
    int v_offset() const { return n; }
    int p_offset() const { return 2 * n; }
    int size() const { return 3 * n; }
};

// The first `constraint_rows` rows are exact constraints. The remaining rows are
// momentum equations solved in the least-squares sense. A square system has
// every row in the constraint block.
struct LinearSystem {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd rhs;
    int constraint_rows = 0;
    UnknownLayout layout;
};

struct SolveStats {
    double residual = 0.0;
    double momentum_residual = 0.0;
    double condition = 0.0;
    int rank = 0;
};

struct SolveResult {
    Eigen::VectorXd coeffs;
    SolveStats stats;
};

class StepSolver {
public:
    explicit StepSolver(const SolverConfig& cfg, std::shared_ptr<const RbfBasis> basis = nullptr);

    const SolverConfig& config() const { return cfg_; }
    const RbfBasis& basis() const { return *basis_; }
    std::shared_ptr<const RbfBasis> basis_handle() const { return basis_; }

    LinearSystem assemble(const FlowState& state_n, const WallActuation& walls) const;
    LinearSystem assemble(const FlowState& state_n, double psi, const ActuationShape& shape) const;

    SolveResult solve(const LinearSystem& system) const;
    FlowState reconstruct(const Eigen::VectorXd& coeffs, double t, int n) const;

    int interior_eval_points() const { return static_cast<int>(interior_pts_.size()); }
    int wall_eval_points() const { return static_cast<int>(wall_pts_.size()); }

private:
    struct ConstraintFactor {
        Eigen::MatrixXd nullspace;
        Eigen::MatrixXd pinv;
        int rank = 0;
    };

    LinearSystem assemble_least_squares(const Eigen::VectorXd& un, const Eigen::VectorXd& vn,
                                        const WallActuation& walls) const;
    LinearSystem assemble_square(const Eigen::VectorXd& un, const Eigen::VectorXd& vn,
                                 const WallActuation& walls) const;

    SolverConfig cfg_;
    std::shared_ptr<const RbfBasis> basis_;
    std::vector<Point> interior_pts_;
    std::vector<Point> wall_pts_;
    BasisRows interior_rows_;
    BasisRows wall_rows_;
    std::shared_ptr<const ConstraintFactor> factor_;
    Eigen::MatrixXd constraint_block_;

    static ConstraintFactor factor_constraints(const Eigen::MatrixXd& C);
};

// Free-function forms of the step operations.
LinearSystem assemble_step_system(const FlowState& state_n, double psi_applied, const ActuationShape& shape,
                                  const SolverConfig& cfg);
SolveResult solve_step(const LinearSystem& system, const SolverConfig& cfg);
double steady_residual(const EquilibriumProfile& profile, const SolverConfig& cfg);

enum class RunMode { open_loop, closed_loop, wave };

struct SimulationOptions {
    RunMode mode = RunMode::open_loop;
    int steps = 250;
    std::optional<ControllerConfig> controller;
    TravelingWaveParams wave;
};

struct Trajectory {
    std::vector<FlowState> states;
    std::vector<EnergySample> energies;
    std::vector<ControlComputation> controls;
    std::vector<bool> has_control;
    std::vector<double> psi_applied;
    std::vector<SolveStats> stats;
    SolverConfig config;
    SimulationOptions options;
};

using StepObserver = std::function<void(const Trajectory&)>;

// Runs the time loop. Throws SolverFailure carrying the failing step index;
// the observer sees the trajectory after every accepted step.
Trajectory simulate(const FlowState& initial, const SimulationOptions& options, const SolverConfig& cfg,
                    const StepObserver& observer = {});

Trajectory simulate(const FlowState& initial, const SimulationOptions& options, const StepSolver& solver,
                    const StepObserver& observer = {});

} // namespace chanflow
