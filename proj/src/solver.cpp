#include "chanflow/solver.hpp"

#include "chanflow/error.hpp"

#include <cmath>
#include <sstream>

namespace chanflow {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string describe(const SolveStats& s)
{
    std::ostringstream os;
    os << "residual=" << s.residual << " momentum_residual=" << s.momentum_residual
       << " condition=" << s.condition << " rank=" << s.rank;
    return os.str();
}

} // namespace

SolverConfig make_solver_config(const Grid& grid, double c, double dt, const EquilibriumProfile& profile,
                                SolveStrategy strategy, int oversampling, int gauge_node)
{
    if (!(c > 0.0)) {
        throw ConfigError("solver.c must be > 0");
    }
    if (!(dt > 0.0)) {
        throw ConfigError("solver.dt must be > 0");
    }
    if (!(profile.R > 0.0)) {
        throw ConfigError("physics.R must be > 0");
    }
    if (oversampling < 1) {
        throw ConfigError("solver.oversampling must be >= 1");
    }
    if (gauge_node < 0 || static_cast<std::size_t>(gauge_node) >= grid.size()) {
        throw ConfigError("pressure gauge node index out of range");
    }
    if (std::abs(profile.Ly - grid.Ly) > 1e-12 * grid.Ly) {
        throw ConfigError("equilibrium profile height differs from grid height");
    }
    return SolverConfig{grid, c, dt, profile, strategy, oversampling, gauge_node};
}

StepSolver::StepSolver(const SolverConfig& cfg, std::shared_ptr<const RbfBasis> basis)
    : cfg_(cfg), basis_(basis ? std::move(basis) : build_basis(cfg.grid, cfg.c))
{
    ensure(basis_->grid() == cfg_.grid, "basis grid differs from solver grid");
    const Grid& g = cfg_.grid;
    const int mx = cfg_.oversampling * (g.nx - 1);
    const int my = cfg_.oversampling * (g.ny - 1) + 1;
    for (int b = 0; b < my; ++b) {
        const double y = b * g.Ly / (my - 1);
        for (int a = 0; a < mx; ++a) {
            const Point pt{a * g.Lx / mx, y};
            if (b == 0 || b == my - 1) {
                wall_pts_.push_back(pt);
            } else {
                interior_pts_.push_back(pt);
            }
        }
    }
    interior_rows_ = basis_->rows_at(interior_pts_);
    wall_rows_ = basis_->rows_at(wall_pts_);

    const int N = basis_->size();
    const BasisRows& at = basis_->at_centers();
    const int nwall = 2 * (g.nx - 1);
    constraint_block_ = MatrixXd::Zero(N + 2 * nwall + 1, 3 * N);
    constraint_block_.block(0, 0, N, N) = at.dx;
    constraint_block_.block(0, N, N, N) = at.dy;
    int row = N;
    for (int k = 0; k < N; ++k) {
        if (basis_->is_wall_center(k)) {
            constraint_block_.block(row, 0, 1, N) = at.phi.row(k);
            constraint_block_.block(row + nwall, N, 1, N) = at.phi.row(k);
            ++row;
        }
    }
    const int gi = cfg_.gauge_node % g.nx;
    const int gj = cfg_.gauge_node / g.nx;
    constraint_block_.block(N + 2 * nwall, 2 * N, 1, N) = at.phi.row(basis_->center_of_node(gi, gj));

    if (cfg_.strategy == SolveStrategy::least_squares) {
        factor_ = std::make_shared<const ConstraintFactor>(factor_constraints(constraint_block_));
    }
}

StepSolver::ConstraintFactor StepSolver::factor_constraints(const MatrixXd& C)
{
    Eigen::BDCSVD<MatrixXd> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& s = svd.singularValues();
    const double tol = 1e-12 * (s.size() > 0 ? s(0) : 0.0);
    int r = 0;
    while (r < s.size() && s(r) > tol) {
        ++r;
    }
    ConstraintFactor f;
    f.rank = r;
    const MatrixXd& V = svd.matrixV();
    const MatrixXd& U = svd.matrixU();
    f.nullspace = V.rightCols(C.cols() - r);
    f.pinv = V.leftCols(r) * s.head(r).cwiseInverse().asDiagonal() * U.leftCols(r).transpose();
    return f;
}

LinearSystem StepSolver::assemble(const FlowState& state_n, double psi, const ActuationShape& shape) const
{
    return assemble(state_n, sample_wall_velocity(shape, psi, cfg_.grid));
}

LinearSystem StepSolver::assemble(const FlowState& state_n, const WallActuation& walls) const
{
    ensure(state_n.U.grid() == cfg_.grid, "state grid differs from solver grid");
    ensure(walls.bottom.size() == static_cast<std::size_t>(cfg_.grid.nx) &&
               walls.top.size() == static_cast<std::size_t>(cfg_.grid.nx),
           "wall actuation needs one sample per x-node");
    const DeviationState dev = deviation(state_n, cfg_.profile);
    const VectorXd un = basis_->interpolate(dev.u);
    const VectorXd vn = basis_->interpolate(dev.v);
    if (cfg_.strategy == SolveStrategy::direct_square) {
        return assemble_square(un, vn, walls);
    }
    return assemble_least_squares(un, vn, walls);
}

LinearSystem StepSolver::assemble_least_squares(const VectorXd& cu, const VectorXd& cv,
                                                const WallActuation& walls) const
{
    const Grid& g = cfg_.grid;
    const int N = basis_->size();
    const int nc = static_cast<int>(constraint_block_.rows());
    const int ni = interior_eval_points();
    const int nw = wall_eval_points();
    const double inv_dt = 1.0 / cfg_.dt;
    const double inv_R = 1.0 / cfg_.profile.R;

    LinearSystem sys;
    sys.layout.n = N;
    sys.constraint_rows = nc;
    sys.matrix = MatrixXd::Zero(nc + 2 * ni + nw, 3 * N);
    sys.rhs = VectorXd::Zero(sys.matrix.rows());
    sys.matrix.topRows(nc) = constraint_block_;

    const int nwall = 2 * (g.nx - 1);
    int row = N;
    for (int k = 0; k < N; ++k) {
        if (basis_->is_wall_center(k)) {
            const int i = k % (g.nx - 1);
            const bool bottom = k < g.nx - 1;
            sys.rhs(row + nwall) = bottom ? walls.bottom[i] : walls.top[i];
            ++row;
        }
    }

    const VectorXd ui = interior_rows_.phi * cu;
    const VectorXd vi = interior_rows_.phi * cv;
    for (int e = 0; e < ni; ++e) {
        const double y = interior_pts_[e].y;
        const double ubar = poiseuille_velocity(cfg_.profile, y);
        const double shear = poiseuille_shear(cfg_.profile, y);
        const Eigen::RowVectorXd op = interior_rows_.phi.row(e) * inv_dt - interior_rows_.lap.row(e) * inv_R +
                                      interior_rows_.dx.row(e) * (ubar + ui(e)) + interior_rows_.dy.row(e) * vi(e);
        const int rx = nc + e;
        const int ry = nc + ni + e;
        sys.matrix.block(rx, 0, 1, N) = op;
        sys.matrix.block(rx, 2 * N, 1, N) = interior_rows_.dx.row(e);
        sys.rhs(rx) = ui(e) * inv_dt - shear * vi(e);
        sys.matrix.block(ry, N, 1, N) = op;
        sys.matrix.block(ry, 2 * N, 1, N) = interior_rows_.dy.row(e);
        sys.rhs(ry) = vi(e) * inv_dt;
    }

    const VectorXd uw = wall_rows_.phi * cu;
    const VectorXd vw = wall_rows_.phi * cv;
    for (int e = 0; e < nw; ++e) {
        const double y = wall_pts_[e].y;
        const double ubar = poiseuille_velocity(cfg_.profile, y);
        const Eigen::RowVectorXd op = wall_rows_.phi.row(e) * inv_dt - wall_rows_.lap.row(e) * inv_R +
                                      wall_rows_.dx.row(e) * (ubar + uw(e)) + wall_rows_.dy.row(e) * vw(e);
        const int r = nc + 2 * ni + e;
        sys.matrix.block(r, N, 1, N) = op;
        sys.matrix.block(r, 2 * N, 1, N) = wall_rows_.dy.row(e);
        sys.rhs(r) = vw(e) * inv_dt;
    }
    return sys;
}

LinearSystem StepSolver::assemble_square(const VectorXd& cu, const VectorXd& cv, const WallActuation& walls) const
{
    const Grid& g = cfg_.grid;
    const int N = basis_->size();
    const BasisRows& at = basis_->at_centers();
    const double inv_dt = 1.0 / cfg_.dt;
    const double inv_R = 1.0 / cfg_.profile.R;
    const int gauge = basis_->center_of_node(cfg_.gauge_node % g.nx, cfg_.gauge_node / g.nx);

    LinearSystem sys;
    sys.layout.n = N;
    sys.matrix = MatrixXd::Zero(3 * N, 3 * N);
    sys.rhs = VectorXd::Zero(3 * N);
    sys.constraint_rows = 3 * N;

    const VectorXd uc = at.phi * cu;
    const VectorXd vc = at.phi * cv;
    for (int k = 0; k < N; ++k) {
        const double y = basis_->centers()[k].y;
        const double ubar = poiseuille_velocity(cfg_.profile, y);
        const double shear = poiseuille_shear(cfg_.profile, y);
        const Eigen::RowVectorXd op = at.phi.row(k) * inv_dt - at.lap.row(k) * inv_R +
                                      at.dx.row(k) * (ubar + uc(k)) + at.dy.row(k) * vc(k);
        const int r = 3 * k;
        if (!basis_->is_wall_center(k)) {
            sys.matrix.block(r, 0, 1, N) = op;
            sys.matrix.block(r, 2 * N, 1, N) = at.dx.row(k);
            sys.rhs(r) = uc(k) * inv_dt - shear * vc(k);
            sys.matrix.block(r + 1, N, 1, N) = op;
            sys.matrix.block(r + 1, 2 * N, 1, N) = at.dy.row(k);
            sys.rhs(r + 1) = vc(k) * inv_dt;
            sys.matrix.block(r + 2, 0, 1, N) = at.dx.row(k);
            sys.matrix.block(r + 2, N, 1, N) = at.dy.row(k);
            continue;
        }
        const int i = k % (g.nx - 1);
        const bool bottom = k < g.nx - 1;
        sys.matrix.block(r, 0, 1, N) = at.phi.row(k);
        sys.matrix.block(r + 1, N, 1, N) = at.phi.row(k);
        sys.rhs(r + 1) = bottom ? walls.bottom[i] : walls.top[i];
        if (k == gauge) {
            sys.matrix.block(r + 2, 2 * N, 1, N) = at.phi.row(k);
        } else {
            sys.matrix.block(r + 2, N, 1, N) = op;
            sys.matrix.block(r + 2, 2 * N, 1, N) = at.dy.row(k);
            sys.rhs(r + 2) = vc(k) * inv_dt;
        }
    }
    return sys;
}

SolveResult StepSolver::solve(const LinearSystem& system) const
{
    const MatrixXd& A = system.matrix;
    const VectorXd& b = system.rhs;
    const int K = static_cast<int>(A.cols());
    const int nc = system.constraint_rows;
    ensure(A.rows() == b.size(), "system matrix and rhs differ in length");
    ensure(K == system.layout.size(), "system width differs from unknown layout");
    ensure(nc >= 0 && nc <= A.rows(), "constraint row count out of range");

    SolveResult out;
    if (nc == A.rows()) {
        if (A.rows() != K) {
            throw SolverFailure("square strategy needs as many rows as unknowns");
        }
        Eigen::FullPivLU<MatrixXd> lu(A);
        out.coeffs = lu.solve(b);
        out.stats.rank = static_cast<int>(lu.rank());
        const double rc = lu.rcond();
        out.stats.condition = (rc > 0.0) ? 1.0 / rc : std::numeric_limits<double>::infinity();
        if (lu.rank() < K) {
            throw SolverFailure("rank-deficient square system (rank " + std::to_string(lu.rank()) + " < " +
                                std::to_string(K) + ")");
        }
    } else {
        const MatrixXd C = A.topRows(nc);
        const VectorXd d = b.head(nc);
        const MatrixXd M = A.bottomRows(A.rows() - nc);
        const VectorXd r = b.tail(A.rows() - nc);

        std::shared_ptr<const ConstraintFactor> factor;
        if (factor_ && C.rows() == constraint_block_.rows() && C == constraint_block_) {
            factor = factor_;
        } else {
            factor = std::make_shared<const ConstraintFactor>(factor_constraints(C));
        }
        const VectorXd wp = factor->pinv * d;
        const MatrixXd MZ = M * factor->nullspace;
        Eigen::ColPivHouseholderQR<MatrixXd> qr(MZ);
        const VectorXd y = qr.solve(r - M * wp);
        out.coeffs = wp + factor->nullspace * y;
        out.stats.rank = factor->rank + static_cast<int>(qr.rank());
        const auto& R = qr.matrixQR();
        const Eigen::Index last = std::max<Eigen::Index>(qr.rank(), 1) - 1;
        out.stats.condition = (MZ.cols() > 0 && R(last, last) != 0.0) ? std::abs(R(0, 0) / R(last, last)) : 1.0;
        if (qr.rank() < MZ.cols()) {
            throw SolverFailure("rank-deficient momentum block (rank " + std::to_string(qr.rank()) + " < " +
                                std::to_string(MZ.cols()) + ")");
        }
        const VectorXd misfit = M * out.coeffs - r;
        const double rn = r.norm();
        out.stats.momentum_residual = (rn > 0.0) ? misfit.norm() / rn : misfit.norm();
    }

    if (!out.coeffs.allFinite()) {
        throw SolverFailure("non-finite coefficients in step solve");
    }
    const VectorXd cres = A.topRows(nc) * out.coeffs - b.head(nc);
    out.stats.residual = cres.norm() / std::max(b.head(nc).norm(), 1.0);
    if (!(out.stats.residual <= 1e-4)) {
        throw SolverFailure("solve residual above 1e-4 (" + describe(out.stats) +
                            "); wall data may violate discrete mass balance");
    }
    if (nc == A.rows()) {
        out.stats.momentum_residual = out.stats.residual;
    }
    return out;
}

FlowState StepSolver::reconstruct(const VectorXd& coeffs, double t, int n) const
{
    const int N = basis_->size();
    ensure(coeffs.size() == 3 * N, "coefficient vector has the wrong length");
    DeviationState dev{basis_->to_nodes(coeffs.segment(0, N)), basis_->to_nodes(coeffs.segment(N, N)),
                       basis_->to_nodes(coeffs.segment(2 * N, N)), t};
    return restore(dev, cfg_.profile, n);
}

LinearSystem assemble_step_system(const FlowState& state_n, double psi_applied, const ActuationShape& shape,
                                  const SolverConfig& cfg)
{
    return StepSolver(cfg).assemble(state_n, psi_applied, shape);
}

SolveResult solve_step(const LinearSystem& system, const SolverConfig& cfg)
{
    return StepSolver(cfg).solve(system);
}

double steady_residual(const EquilibriumProfile& profile, const SolverConfig& cfg)
{
    SolverConfig c = cfg;
    c.profile = profile;
    const StepSolver solver(c);
    const FlowState eq = sample_equilibrium(c.grid, profile);
    const LinearSystem sys = solver.assemble(eq, WallActuation{std::vector<double>(c.grid.nx, 0.0),
                                                               std::vector<double>(c.grid.nx, 0.0)});
    const DeviationState dev = deviation(eq, profile);
    const int N = solver.basis().size();
    VectorXd w(3 * N);
    w << solver.basis().interpolate(dev.u), solver.basis().interpolate(dev.v), solver.basis().interpolate(dev.p);
    const double scale = std::max({sys.rhs.norm(), (sys.matrix * w).norm(), 1.0});
    return (sys.matrix * w - sys.rhs).norm() / scale;
}

Trajectory simulate(const FlowState& initial, const SimulationOptions& options, const SolverConfig& cfg,
                    const StepObserver& observer)
{
    return simulate(initial, options, StepSolver(cfg), observer);
}

Trajectory simulate(const FlowState& initial, const SimulationOptions& options, const StepSolver& solver,
                    const StepObserver& observer)
{
    const SolverConfig& cfg = solver.config();
    if (options.steps < 1) {
        throw ConfigError("steps must be >= 1");
    }
    if (options.mode == RunMode::closed_loop && !options.controller) {
        throw ConfigError("closed-loop mode needs a controller configuration");
    }
    ensure(initial.U.grid() == cfg.grid, "initial state grid differs from solver grid");

    Trajectory tr;
    tr.config = cfg;
    tr.options = options;

    auto record = [&](const FlowState& s) {
        const DeviationState dev = deviation(s, cfg.profile);
        tr.energies.push_back(energy(dev));
        if (options.controller) {
            try {
                tr.controls.push_back(control_step(dev, cfg.profile, *options.controller));
            } catch (const ContractViolation& e) {
                throw SolverFailure(std::string("controller: ") + e.what(), s.n);
            }
            tr.has_control.push_back(true);
        } else {
            tr.controls.push_back(ControlComputation{});
            tr.has_control.push_back(false);
        }
        tr.states.push_back(s);
    };

    FlowState s0 = initial;
    s0.t = 0.0;
    s0.n = 0;
    record(s0);
    tr.psi_applied.push_back(0.0);
    tr.stats.push_back(SolveStats{});
    if (observer) {
        observer(tr);
    }

    const std::vector<double> zeros(cfg.grid.nx, 0.0);
    for (int n = 0; n < options.steps; ++n) {
        const int next = n + 1;
        const double t1 = next * cfg.dt;
        WallActuation walls{zeros, zeros};
        double psi = 0.0;
        if (options.mode == RunMode::closed_loop) {
            const int src = next - options.controller->delay_steps;
            psi = (src >= 0) ? tr.controls[src].psi : 0.0;
            walls = sample_wall_velocity(options.controller->shape, psi, cfg.grid);
        } else if (options.mode == RunMode::wave) {
            walls = traveling_wave(options.wave, t1, cfg.grid);
        }

        SolveResult res;
        FlowState s1 = tr.states.back();
        try {
            res = solver.solve(solver.assemble(tr.states.back(), walls));
            s1 = solver.reconstruct(res.coeffs, t1, next);
        } catch (const SolverFailure& e) {
            throw SolverFailure(std::string("step ") + std::to_string(next) + ": " + e.what(), next);
        } catch (const ContractViolation& e) {
            throw SolverFailure(std::string("step ") + std::to_string(next) + ": " + e.what(), next);
        }
        tr.psi_applied.push_back(psi);
        tr.stats.push_back(res.stats);
        record(s1);
        if (observer) {
            observer(tr);
        }
    }
    return tr;
}

} // namespace chanflow
