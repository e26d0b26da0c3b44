#pragma once

#include "chanflow/fields.hpp"

#include <optional>
#include <string>
#include <vector>

namespace chanflow {

enum class ShapeKind { step, tabulated };

// Wall profile F on [0, Lx]. The step kind follows the piecewise-constant
// definition with a low plateau on [0,eps) and [Lx-eps,Lx] and theta on
// [eps, Lx-eps). The tabulated kind interpolates (x, F) pairs linearly.
class ActuationShape {
public:
    // The default shape is the step with theta = 1, eps = 1/3 on [0, 1].
    ActuationShape();

    ShapeKind kind() const { return kind_; }
    double Lx() const { return Lx_; }
    double m1() const { return m1_; }
    double m3() const { return m3_; }
    bool has_analytic_moments() const { return kind_ == ShapeKind::step; }

    double theta() const { return theta_; }
    double epsilon() const { return epsilon_; }
    const std::vector<double>& table_x() const { return table_x_; }
    const std::vector<double>& table_F() const { return table_F_; }

    double value(double x) const;
    double max_abs() const;

    // One value per x-node: the average of F against the periodic nodal hat
    // function. The trapezoid sum of these samples equals the exact integral of F.
    std::vector<double> wall_samples(const Grid& grid) const;

    ActuationShape scaled(double lambda) const;

    friend ActuationShape make_step_shape(double theta, double epsilon, double Lx);
    friend ActuationShape make_tabulated_shape(std::vector<double> x, std::vector<double> F);

private:
    ShapeKind kind_ = ShapeKind::step;
    double Lx_ = 1.0;
    double m1_ = 0.0;
    double m3_ = 0.0;
    double theta_ = 0.0;
    double epsilon_ = 0.0;
    std::vector<double> table_x_;
    std::vector<double> table_F_;
};

double step_cubic_mean(double theta, double epsilon, double Lx);

ActuationShape make_step_shape(double theta, double epsilon, double Lx);
ActuationShape make_tabulated_shape(std::vector<double> x, std::vector<double> F);

struct MomentReport {
    double m1_quadrature = 0.0;
    double m3_quadrature = 0.0;
    std::optional<double> m1_analytic;
    std::optional<double> m3_analytic;
    bool endpoint_values_match = false;
    bool endpoint_slopes_match = false;
    double tau_mean = 0.0;
    double tau_cubic = 0.0;
    bool accepted = false;
    std::string violation;
};

MomentReport validate_shape(const ActuationShape& shape, const Grid& grid);

struct TravelingWaveParams {
    double A = 0.0;
    double omega = 1.0;
    double c = 0.0;
};

TravelingWaveParams make_traveling_wave(double A, double omega, double c);

struct WallActuation {
    std::vector<double> bottom;
    std::vector<double> top;
};

WallActuation sample_wall_velocity(const ActuationShape& shape, double psi, const Grid& grid);
WallActuation traveling_wave(const TravelingWaveParams& params, double t, const Grid& grid);

} // namespace chanflow
