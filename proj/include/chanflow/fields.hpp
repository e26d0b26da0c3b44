#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chanflow {

// Regular tensor-product grid on [0,Lx] x [0,Ly], boundary nodes included.
// Node (i, j) sits at (i*Lx/(nx-1), j*Ly/(ny-1)); storage is row-major in y then x.
struct Grid {
    int nx = 0;
    int ny = 0;
    double Lx = 0.0;
    double Ly = 0.0;

    double hx() const { return Lx / (nx - 1); }
    double hy() const { return Ly / (ny - 1); }
    double x(int i) const { return i * hx(); }
    double y(int j) const { return j * hy(); }
    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

    bool operator==(const Grid&) const = default;
};

Grid make_grid(int nx, int ny, double Lx, double Ly);

class ScalarField {
public:
    ScalarField(const Grid& grid, std::vector<double> values);

    static ScalarField zeros(const Grid& grid);

    template <class Fn>
    static ScalarField sample(const Grid& grid, Fn&& fn)
    {
        std::vector<double> vals(grid.size());
        for (int j = 0; j < grid.ny; ++j) {
            for (int i = 0; i < grid.nx; ++i) {
                vals[grid.index(i, j)] = fn(grid.x(i), grid.y(j));
            }
        }
        return ScalarField(grid, std::move(vals));
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
    double max_abs() const;

    // Values along y = 0 (bottom) or y = Ly (top), one per x-node.
    std::vector<double> bottom_row() const;
    std::vector<double> top_row() const;

private:
    Grid grid_;
    std::vector<double> values_;
};

struct FlowState {
    ScalarField U;
    ScalarField V;
    ScalarField P;
    double t = 0.0;
    int n = 0;
};

struct EquilibriumProfile {
    double R = 5.0e4;
    double a = 4.0 / 5.0e4;
    double b = 0.0;
    double Ly = 1.0;
};

EquilibriumProfile make_profile(double R, double a, double b, double Ly);

double poiseuille_velocity(const EquilibriumProfile& profile, double y);
double poiseuille_shear(const EquilibriumProfile& profile, double y);
double equilibrium_pressure(const EquilibriumProfile& profile, double x);

FlowState sample_equilibrium(const Grid& grid, const EquilibriumProfile& profile);

struct DeviationState {
    ScalarField u;
    ScalarField v;
    ScalarField p;
    double t = 0.0;
};

DeviationState deviation(const FlowState& state, const EquilibriumProfile& profile);
FlowState restore(const DeviationState& dev, const EquilibriumProfile& profile, int n);

struct EnergySample {
    double t = 0.0;
    double E = 0.0;
};

double trapz2(const ScalarField& f);
double trapz_wall(std::span<const double> samples, const Grid& grid);

EnergySample energy(const DeviationState& dev);
double coupling_integral(const DeviationState& dev, const EquilibriumProfile& profile);

} // namespace chanflow
