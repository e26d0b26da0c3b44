#include "chanflow/fields.hpp"

#include "chanflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chanflow {

Grid make_grid(int nx, int ny, double Lx, double Ly)
{
    if (nx < 3 || ny < 3) {
        throw ConfigError("grid needs at least 3 nodes per direction, got " + std::to_string(nx) + "x" +
                          std::to_string(ny));
    }
    if (!(Lx > 0.0) || !(Ly > 0.0) || !std::isfinite(Lx) || !std::isfinite(Ly)) {
        throw ConfigError("grid lengths Lx, Ly must be positive and finite");
    }
    return Grid{nx, ny, Lx, Ly};
}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values))
{
    ensure(values_.size() == grid_.size(), "field size does not match grid");
    for (double v : values_) {
        ensure(std::isfinite(v), "field contains a non-finite value");
    }
}

ScalarField ScalarField::zeros(const Grid& grid)
{
    return ScalarField(grid, std::vector<double>(grid.size(), 0.0));
}

double ScalarField::max_abs() const
{
    double m = 0.0;
    for (double v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

std::vector<double> ScalarField::bottom_row() const
{
    return {values_.begin(), values_.begin() + grid_.nx};
}

std::vector<double> ScalarField::top_row() const
{
    auto first = values_.begin() + static_cast<std::ptrdiff_t>(grid_.index(0, grid_.ny - 1));
    return {first, first + grid_.nx};
}

EquilibriumProfile make_profile(double R, double a, double b, double Ly)
{
    if (!(R > 0.0) || !std::isfinite(R)) {
        throw ConfigError("Reynolds number must be positive");
    }
    if (!(a >= 0.0) || !std::isfinite(a)) {
        throw ConfigError("pressure-drop slope a must be >= 0");
    }
    if (!(b >= 0.0) || !std::isfinite(b)) {
        throw ConfigError("pressure offset b must be >= 0");
    }
    if (!(Ly > 0.0)) {
        throw ConfigError("channel height must be positive");
    }
    return EquilibriumProfile{R, a, b, Ly};
}

double poiseuille_velocity(const EquilibriumProfile& profile, double y)
{
    const double tol = 1e-12 * profile.Ly;
    if (y < -tol || y > profile.Ly + tol) {
        throw ContractViolation("y outside [0, Ly] in poiseuille_velocity");
    }
    return 0.5 * profile.R * profile.a * y * (profile.Ly - y);
}

double poiseuille_shear(const EquilibriumProfile& profile, double y)
{
    return 0.5 * profile.R * profile.a * (profile.Ly - 2.0 * y);
}

double equilibrium_pressure(const EquilibriumProfile& profile, double x)
{
    return -profile.a * x + profile.b;
}

FlowState sample_equilibrium(const Grid& grid, const EquilibriumProfile& profile)
{
    return FlowState{
        ScalarField::sample(grid, [&](double, double y) { return poiseuille_velocity(profile, y); }),
        ScalarField::zeros(grid),
        ScalarField::sample(grid, [&](double x, double) { return equilibrium_pressure(profile, x); }),
        0.0,
        0,
    };
}

DeviationState deviation(const FlowState& state, const EquilibriumProfile& profile)
{
    const Grid& g = state.U.grid();
    ensure(state.V.grid() == g && state.P.grid() == g, "flow fields live on different grids");
    ensure(std::abs(g.Ly - profile.Ly) <= 1e-12 * profile.Ly, "profile height differs from grid height");

    std::vector<double> u(g.size()), p(g.size());
    for (int j = 0; j < g.ny; ++j) {
        const double ubar = poiseuille_velocity(profile, g.y(j));
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            u[k] = state.U.values()[k] - ubar;
            p[k] = state.P.values()[k] - equilibrium_pressure(profile, g.x(i));
        }
    }
    return DeviationState{ScalarField(g, std::move(u)), state.V, ScalarField(g, std::move(p)), state.t};
}

FlowState restore(const DeviationState& dev, const EquilibriumProfile& profile, int n)
{
    const Grid& g = dev.u.grid();
    std::vector<double> U(g.size()), P(g.size());
    for (int j = 0; j < g.ny; ++j) {
        const double ubar = poiseuille_velocity(profile, g.y(j));
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            U[k] = dev.u.values()[k] + ubar;
            P[k] = dev.p.values()[k] + equilibrium_pressure(profile, g.x(i));
        }
    }
    return FlowState{ScalarField(g, std::move(U)), dev.v, ScalarField(g, std::move(P)), dev.t, n};
}

double trapz2(const ScalarField& f)
{
    const Grid& g = f.grid();
    double sum = 0.0;
    for (int j = 0; j < g.ny; ++j) {
        const double wy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
        double row = 0.0;
        for (int i = 0; i < g.nx; ++i) {
            const double wx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
            row += wx * f(i, j);
        }
        sum += wy * row;
    }
    return sum * g.hx() * g.hy();
}

double trapz_wall(std::span<const double> samples, const Grid& grid)
{
    if (samples.size() != static_cast<std::size_t>(grid.nx)) {
        throw ContractViolation("trapz_wall expects " + std::to_string(grid.nx) + " samples, got " +
                                std::to_string(samples.size()));
    }
    double sum = 0.5 * (samples.front() + samples.back());
    for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
        sum += samples[i];
    }
    return sum * grid.hx();
}

EnergySample energy(const DeviationState& dev)
{
    const Grid& g = dev.u.grid();
    std::vector<double> sq(g.size());
    for (std::size_t k = 0; k < sq.size(); ++k) {
        const double u = dev.u.values()[k];
        const double v = dev.v.values()[k];
        sq[k] = u * u + v * v;
    }
    return EnergySample{dev.t, 0.5 * trapz2(ScalarField(g, std::move(sq)))};
}

double coupling_integral(const DeviationState& dev, const EquilibriumProfile& profile)
{
    const Grid& g = dev.u.grid();
    std::vector<double> w(g.size());
    for (int j = 0; j < g.ny; ++j) {
        const double shear = poiseuille_shear(profile, g.y(j));
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            w[k] = dev.u.values()[k] * shear * dev.v.values()[k];
        }
    }
    return trapz2(ScalarField(g, std::move(w)));
}

} // namespace chanflow
