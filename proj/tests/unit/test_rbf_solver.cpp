#include "chanflow/error.hpp"
#include "chanflow/rbf_basis.hpp"
#include "chanflow/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace chanflow;
using doctest::Approx;

namespace {

const double kPi = std::numbers::pi;

FlowState start_state(const Grid& g)
{
    return FlowState{ScalarField::zeros(g),
                     ScalarField::sample(g, [](double x, double) { return std::sin(4.0 * kPi * x); }),
                     ScalarField::sample(g, [](double x, double) { return -4.0 / 5.0e4 * x; }), 0.0, 0};
}

SolverConfig default_config(int n = 12)
{
    return make_solver_config(make_grid(n, n, 1.0, 1.0), 0.11, 0.2, EquilibriumProfile{});
}

double max_diff(const ScalarField& a, const ScalarField& b)
{
    double m = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) {
        m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    }
    return m;
}

} // namespace

TEST_CASE("multiquadric kernel")
{
    CHECK(multiquadric(0.0, 0.11) == Approx(0.11).epsilon(1e-15));
    CHECK(multiquadric(3.0, 4.0) == Approx(5.0).epsilon(1e-15));
    for (double r : {0.1, 0.7, 2.0}) {
        CHECK(multiquadric(r, 0.3) == multiquadric(-r, 0.3));
    }
}

TEST_CASE("chordal offset has a periodic square and matches small offsets")
{
    CHECK(chordal_offset(1e-4, 1.0) == Approx(1e-4).epsilon(1e-7));
    for (double dx : {0.1, 0.35, -0.2}) {
        CHECK(std::pow(chordal_offset(dx + 1.0, 1.0), 2) == Approx(std::pow(chordal_offset(dx, 1.0), 2)).epsilon(1e-12));
        CHECK(chordal_offset(-dx, 1.0) == -chordal_offset(dx, 1.0));
    }
}

TEST_CASE("basis on the 12x12 grid")
{
    const auto basis = build_basis(make_grid(12, 12, 1.0, 1.0), 0.11);
    CHECK(basis->size() == 132);
    const Eigen::MatrixXd& A = basis->eval_matrix();
    for (int k = 0; k < basis->size(); ++k) {
        CHECK(A(k, k) == Approx(0.11).epsilon(1e-15));
    }
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(basis->condition_estimate() < 1e14);
    CHECK(basis->center_of_node(11, 4) == basis->center_of_node(0, 4));
    CHECK(basis->is_wall_center(0));
    CHECK_FALSE(basis->is_wall_center(11 * 5));
}

TEST_CASE("interpolation reproduces node samples")
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    const auto basis = build_basis(g, 0.11);
    const ScalarField one = ScalarField::sample(g, [](double, double) { return 1.0; });
    const ScalarField back = basis->to_nodes(basis->interpolate(one));
    CHECK(max_diff(back, one) <= 1e-8);

    const ScalarField f =
        ScalarField::sample(g, [](double x, double y) { return std::sin(2.0 * kPi * x) * std::exp(y); });
    CHECK(max_diff(basis->to_nodes(basis->interpolate(f)), f) <= 1e-8 * f.max_abs());
}

TEST_CASE("x-derivative of a periodic field converges under refinement")
{
    auto f = [](double x, double y) { return std::sin(2.0 * kPi * x) * std::cos(kPi * y); };
    auto fx = [](double x, double y) { return 2.0 * kPi * std::cos(2.0 * kPi * x) * std::cos(kPi * y); };
    double prev = 1e300;
    for (int n : {12, 18, 24}) {
        const Grid g = make_grid(n, n, 1.0, 1.0);
        const auto basis = build_basis(g, 0.11);
        const Eigen::VectorXd w = basis->interpolate(ScalarField::sample(g, f));
        const Eigen::VectorXd d = basis->dx_matrix() * w;
        double err = 0.0;
        for (int k = 0; k < basis->size(); ++k) {
            const Point& p = basis->centers()[k];
            if (p.y > 0.0 && p.y < 1.0) {
                err = std::max(err, std::abs(d(k) - fx(p.x, p.y)));
            }
        }
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 0.05 * 2.0 * kPi);
}

TEST_CASE("ill-conditioned basis is reported")
{
    CHECK_THROWS_AS(build_basis(make_grid(12, 12, 1.0, 1.0), 5.0), IllConditionedError);
}

TEST_CASE("steady residual at the sampled equilibrium")
{
    CHECK(steady_residual(EquilibriumProfile{}, default_config()) <= 1e-6);
    const EquilibriumProfile flat = make_profile(5.0e4, 0.0, 0.0, 1.0);
    CHECK(steady_residual(flat, default_config()) <= 1e-12);
    CHECK(steady_residual(EquilibriumProfile{}, default_config(24)) <= 1e-6);
}

TEST_CASE("row bookkeeping of the assembled system")
{
    const SolverConfig cfg = default_config();
    const StepSolver solver(cfg);
    const LinearSystem sys = solver.assemble(start_state(cfg.grid), 0.0, ActuationShape{});
    const int N = 132;
    const int nx = 12;
    const int mx = 2 * (nx - 1);
    const int my = 2 * (12 - 1) + 1;
    const int constraints = N + 2 * 2 * (nx - 1) + 1;
    CHECK(sys.layout.size() == 3 * N);
    CHECK(sys.matrix.cols() == 3 * N);
    CHECK(sys.constraint_rows == constraints);
    CHECK(solver.interior_eval_points() == mx * (my - 2));
    CHECK(solver.wall_eval_points() == 2 * mx);
    CHECK(sys.matrix.rows() == constraints + 2 * mx * (my - 2) + 2 * mx);
    CHECK(sys.matrix.rows() == 1145);
    CHECK(sys.matrix.rows() >= sys.matrix.cols());

    SolverConfig sq = cfg;
    sq.strategy = SolveStrategy::direct_square;
    const LinearSystem ssys = StepSolver(sq).assemble(start_state(cfg.grid), 0.0, ActuationShape{});
    CHECK(ssys.matrix.rows() == 3 * N);
    CHECK(ssys.constraint_rows == 3 * N);
}

TEST_CASE("equilibrium is a fixed point of one step")
{
    const SolverConfig cfg = default_config();
    const FlowState eq = sample_equilibrium(cfg.grid, cfg.profile);
    const LinearSystem sys = assemble_step_system(eq, 0.0, ActuationShape{}, cfg);
    const SolveResult res = solve_step(sys, cfg);
    const FlowState next = StepSolver(cfg).reconstruct(res.coeffs, cfg.dt, 1);
    const double umax = 0.5;
    CHECK(max_diff(next.U, eq.U) <= 1e-6 * umax);
    CHECK(max_diff(next.V, eq.V) <= 1e-6 * umax);
    CHECK(max_diff(next.P, eq.P) <= 1e-6 * umax);
}

TEST_CASE("duplicating the least-squares rows leaves the solution unchanged")
{
    const SolverConfig cfg = default_config();
    const StepSolver solver(cfg);
    const LinearSystem sys = solver.assemble(start_state(cfg.grid), 0.3, ActuationShape{});
    const int nc = sys.constraint_rows;
    const int nm = static_cast<int>(sys.matrix.rows()) - nc;

    LinearSystem dup = sys;
    dup.matrix.resize(nc + 2 * nm, sys.matrix.cols());
    dup.rhs.resize(nc + 2 * nm);
    dup.matrix << sys.matrix, sys.matrix.bottomRows(nm);
    dup.rhs << sys.rhs, sys.rhs.tail(nm);

    const SolveResult a = solver.solve(sys);
    const SolveResult b = solver.solve(dup);
    const double scale = a.coeffs.cwiseAbs().maxCoeff();
    CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() <= 1e-9 * scale);
}

TEST_CASE("solves are deterministic")
{
    const SolverConfig cfg = default_config();
    const StepSolver solver(cfg);
    const LinearSystem sys = solver.assemble(start_state(cfg.grid), 0.3, ActuationShape{});
    LinearSystem same = sys;
    same.rhs.array() += 0.0;
    const SolveResult a = solver.solve(sys);
    const SolveResult b = solver.solve(same);
    CHECK(a.coeffs.size() == b.coeffs.size());
    bool identical = true;
    for (Eigen::Index k = 0; k < a.coeffs.size(); ++k) {
        identical = identical && a.coeffs(k) == b.coeffs(k);
    }
    CHECK(identical);
}

TEST_CASE("large time step drops the dependence on the previous velocities")
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    const EquilibriumProfile p;
    const StepSolver big(make_solver_config(g, 0.11, 1e12, p));
    const StepSolver bigger(make_solver_config(g, 0.11, 1e15, p));
    const FlowState s = start_state(g);
    const LinearSystem a = big.assemble(s, 0.0, ActuationShape{});
    const LinearSystem b = bigger.assemble(s, 0.0, ActuationShape{});
    const double scale = a.matrix.cwiseAbs().maxCoeff();
    CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() <= 1e-9 * scale);

    // Steady assembly at the equilibrium: every momentum right-hand side is zero.
    const LinearSystem eq = big.assemble(sample_equilibrium(g, p), 0.0, ActuationShape{});
    CHECK(eq.rhs.tail(eq.rhs.size() - eq.constraint_rows).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one step produces a trajectory of length two")
{
    const SolverConfig cfg = default_config();
    for (RunMode mode : {RunMode::open_loop, RunMode::closed_loop, RunMode::wave}) {
        SimulationOptions opt;
        opt.mode = mode;
        opt.steps = 1;
        opt.controller = make_controller_config(1.0, ActuationShape{}, 1);
        opt.wave = make_traveling_wave(0.05, 2.0 * kPi, 0.5);
        const Trajectory tr = simulate(start_state(cfg.grid), opt, cfg);
        REQUIRE(tr.states.size() == 2);
        CHECK(tr.energies.size() == 2);
        CHECK(tr.states[0].t == 0.0);
        CHECK(tr.states[1].t == Approx(0.2).epsilon(1e-15));
        CHECK(tr.psi_applied[0] == 0.0);
    }
}

TEST_CASE("accepted steps honour walls, periodicity and the control delay")
{
    const SolverConfig cfg = default_config();
    const ActuationShape shape;
    SimulationOptions opt;
    opt.mode = RunMode::closed_loop;
    opt.steps = 4;
    opt.controller = make_controller_config(1.0, shape, 1);
    const Trajectory tr = simulate(start_state(cfg.grid), opt, cfg);
    const Grid& g = cfg.grid;
    const std::vector<double> F = shape.wall_samples(g);
    for (std::size_t n = 1; n < tr.states.size(); ++n) {
        const FlowState& s = tr.states[n];
        const double scale = std::max({1.0, s.U.max_abs(), s.V.max_abs()});
        CHECK(tr.psi_applied[n] == tr.controls[n - 1].psi);
        for (int i = 0; i < g.nx; ++i) {
            CHECK(std::abs(s.U(i, 0)) <= 1e-8 * scale);
            CHECK(std::abs(s.U(i, g.ny - 1)) <= 1e-8 * scale);
            CHECK(s.V(i, 0) == Approx(F[i] * tr.psi_applied[n]).epsilon(1e-8).scale(scale));
            CHECK(s.V(i, g.ny - 1) == Approx(-F[i] * tr.psi_applied[n]).epsilon(1e-8).scale(scale));
        }
        for (int j = 0; j < g.ny; ++j) {
            CHECK(std::abs(s.U(0, j) - s.U(g.nx - 1, j)) <= 1e-8 * scale);
            CHECK(std::abs(s.V(0, j) - s.V(g.nx - 1, j)) <= 1e-8 * scale);
        }
        CHECK(tr.stats[n].residual <= 1e-6);
        CHECK(tr.states[n].t == Approx(n * 0.2).epsilon(1e-14));
    }
}

TEST_CASE("open loop from equilibrium stays at equilibrium")
{
    const SolverConfig cfg = default_config();
    SimulationOptions opt;
    opt.steps = 20;
    const Trajectory tr = simulate(sample_equilibrium(cfg.grid, cfg.profile), opt, cfg);
    for (const EnergySample& e : tr.energies) {
        CHECK(e.E <= 1e-8);
    }
}

TEST_CASE("identical runs give identical trajectories")
{
    const SolverConfig cfg = default_config();
    SimulationOptions opt;
    opt.mode = RunMode::closed_loop;
    opt.steps = 3;
    opt.controller = make_controller_config(1.0, ActuationShape{}, 1);
    const Trajectory a = simulate(start_state(cfg.grid), opt, cfg);
    const Trajectory b = simulate(start_state(cfg.grid), opt, cfg);
    CHECK(a.states.back().U.values() == b.states.back().U.values());
    CHECK(a.states.back().P.values() == b.states.back().P.values());
}

TEST_CASE("solver configuration errors")
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    CHECK_THROWS_AS(make_solver_config(g, -0.1, 0.2, EquilibriumProfile{}), ConfigError);
    CHECK_THROWS_AS(make_solver_config(g, 0.11, 0.0, EquilibriumProfile{}), ConfigError);
    CHECK_THROWS_AS(make_solver_config(g, 0.11, 0.2, EquilibriumProfile{}, SolveStrategy::least_squares, 2, 999),
                    ConfigError);
    SimulationOptions opt;
    opt.mode = RunMode::closed_loop;
    CHECK_THROWS_AS(simulate(start_state(g), opt, default_config()), ConfigError);
}
