#include "chanflow/actuation.hpp"

#include "chanflow/error.hpp"

#include <algorithm>
#include <cmath>

namespace chanflow {

namespace {

double wrap(double x, double Lx)
{
    double r = x - Lx * std::floor(x / Lx);
    return (r >= Lx) ? 0.0 : r;
}

double interp_table(const std::vector<double>& xs, const std::vector<double>& fs, double x)
{
    if (x <= xs.front()) {
        return fs.front();
    }
    if (x >= xs.back()) {
        return fs.back();
    }
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return (1.0 - t) * fs[k - 1] + t * fs[k];
}

double trapz_table(const std::vector<double>& xs, const std::vector<double>& fs, int power)
{
    double sum = 0.0;
    for (std::size_t k = 1; k < xs.size(); ++k) {
        sum += 0.5 * (xs[k] - xs[k - 1]) * (std::pow(fs[k - 1], power) + std::pow(fs[k], power));
    }
    return sum;
}

} // namespace

double step_cubic_mean(double theta, double epsilon, double Lx)
{
    const double d = 2.0 * epsilon - Lx;
    return theta * theta * theta * ((Lx - 2.0 * epsilon) + d * d * d / (4.0 * epsilon * epsilon));
}

ActuationShape make_step_shape(double theta, double epsilon, double Lx)
{
    if (!(Lx > 0.0) || !std::isfinite(Lx)) {
        throw ConfigError("shape length Lx must be positive");
    }
    if (!std::isfinite(theta) || theta == 0.0) {
        throw DegenerateShapeError("step amplitude theta must be nonzero");
    }
    if (!(epsilon > 0.0) || !(epsilon < Lx)) {
        throw ConfigError("step offset epsilon must lie in (0, Lx)");
    }
    const double tol = 1e-12 * Lx;
    if (std::abs(epsilon - 0.25 * Lx) <= tol || std::abs(epsilon - 0.5 * Lx) <= tol) {
        throw DegenerateShapeError("degenerate cubic mean: epsilon = Lx/4 or Lx/2 gives m3 = 0");
    }
    if (epsilon > 0.5 * Lx) {
        throw ConfigError("step offset epsilon > Lx/2 leaves no theta plateau; F would be a nonzero constant");
    }

    ActuationShape s;
    s.kind_ = ShapeKind::step;
    s.Lx_ = Lx;
    s.theta_ = theta;
    s.epsilon_ = epsilon;
    s.m1_ = 0.0;
    s.m3_ = step_cubic_mean(theta, epsilon, Lx);
    return s;
}

ActuationShape make_tabulated_shape(std::vector<double> x, std::vector<double> F)
{
    if (x.size() != F.size() || x.size() < 3) {
        throw ConfigError("tabulated shape needs at least 3 (x, F) pairs of equal length");
    }
    if (x.front() != 0.0) {
        throw ConfigError("tabulated shape must start at x = 0");
    }
    for (std::size_t k = 1; k < x.size(); ++k) {
        if (!(x[k] > x[k - 1])) {
            throw ConfigError("tabulated shape x values must be strictly increasing");
        }
    }
    for (double f : F) {
        if (!std::isfinite(f)) {
            throw ConfigError("tabulated shape contains a non-finite F value");
        }
    }

    ActuationShape s;
    s.kind_ = ShapeKind::tabulated;
    s.Lx_ = x.back();
    s.m1_ = trapz_table(x, F, 1);
    s.m3_ = trapz_table(x, F, 3);
    s.table_x_ = std::move(x);
    s.table_F_ = std::move(F);
    return s;
}

ActuationShape::ActuationShape()
    : kind_(ShapeKind::step), Lx_(1.0), m1_(0.0), m3_(step_cubic_mean(1.0, 1.0 / 3.0, 1.0)), theta_(1.0),
      epsilon_(1.0 / 3.0)
{
}

double ActuationShape::value(double x) const
{
    if (kind_ == ShapeKind::tabulated) {
        return interp_table(table_x_, table_F_, x);
    }
    const double low = theta_ * (2.0 * epsilon_ - Lx_) / (2.0 * epsilon_);
    if (x < epsilon_ || x >= Lx_ - epsilon_) {
        return low;
    }
    return theta_;
}

double ActuationShape::max_abs() const
{
    if (kind_ == ShapeKind::tabulated) {
        double m = 0.0;
        for (double f : table_F_) {
            m = std::max(m, std::abs(f));
        }
        return m;
    }
    const double low = theta_ * (2.0 * epsilon_ - Lx_) / (2.0 * epsilon_);
    return std::max(std::abs(theta_), std::abs(low));
}

std::vector<double> ActuationShape::wall_samples(const Grid& grid) const
{
    ensure(std::abs(grid.Lx - Lx_) <= 1e-12 * Lx_, "shape length differs from grid length");

    std::vector<double> breaks;
    if (kind_ == ShapeKind::step) {
        breaks = {0.0, epsilon_, Lx_ - epsilon_};
    } else {
        breaks = table_x_;
    }

    const double h = grid.hx();
    std::vector<double> out(grid.nx);
    std::vector<double> cuts;
    for (int i = 0; i < grid.nx; ++i) {
        const double xi = grid.x(i);
        cuts.assign({xi - h, xi, xi + h});
        for (double xb : breaks) {
            for (int k = -1; k <= 1; ++k) {
                const double xs = xb + k * Lx_;
                if (xs > xi - h && xs < xi + h) {
                    cuts.push_back(xs);
                }
            }
        }
        std::sort(cuts.begin(), cuts.end());

        // F is affine on each piece; recover its end values from two interior
        // samples and integrate the product with the hat weight by Simpson's rule.
        double acc = 0.0;
        for (std::size_t k = 1; k < cuts.size(); ++k) {
            const double a = cuts[k - 1];
            const double b = cuts[k];
            if (!(b > a)) {
                continue;
            }
            const double q = 0.25 * (b - a);
            const double f1 = value(wrap(a + q, Lx_));
            const double f2 = value(wrap(b - q, Lx_));
            const double fa = f1 - 0.5 * (f2 - f1);
            const double fb = f2 + 0.5 * (f2 - f1);
            const double fm = 0.5 * (f1 + f2);
            const double m = 0.5 * (a + b);
            const double wa = 1.0 - std::abs(a - xi) / h;
            const double wb = 1.0 - std::abs(b - xi) / h;
            const double wm = 1.0 - std::abs(m - xi) / h;
            acc += (b - a) / 6.0 * (wa * fa + 4.0 * wm * fm + wb * fb);
        }
        out[i] = acc / h;
    }
    return out;
}

ActuationShape ActuationShape::scaled(double lambda) const
{
    if (!std::isfinite(lambda) || lambda == 0.0) {
        throw DegenerateShapeError("shape scale factor must be nonzero");
    }
    if (kind_ == ShapeKind::step) {
        return make_step_shape(lambda * theta_, epsilon_, Lx_);
    }
    std::vector<double> F = table_F_;
    for (double& f : F) {
        f *= lambda;
    }
    return make_tabulated_shape(table_x_, std::move(F));
}

MomentReport validate_shape(const ActuationShape& shape, const Grid& grid)
{
    MomentReport rep;
    const std::vector<double> s = shape.wall_samples(grid);
    std::vector<double> s3(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s3[i] = s[i] * s[i] * s[i];
    }
    rep.m1_quadrature = trapz_wall(s, grid);
    rep.m3_quadrature = trapz_wall(s3, grid);

    const double fmax = shape.max_abs();
    rep.tau_mean = 1e-8 * fmax * shape.Lx();
    rep.tau_cubic = 1e-6 * fmax * fmax * fmax * shape.Lx();

    if (shape.has_analytic_moments()) {
        rep.m1_analytic = shape.m1();
        rep.m3_analytic = shape.m3();
        rep.endpoint_values_match = true;
        rep.endpoint_slopes_match = true;
    } else {
        const auto& xs = shape.table_x();
        const auto& fs = shape.table_F();
        const std::size_t n = xs.size();
        rep.endpoint_values_match = std::abs(fs.front() - fs.back()) <= 1e-8 * std::max(fmax, 1e-300);
        double hmin = xs.back();
        for (std::size_t k = 1; k < n; ++k) {
            hmin = std::min(hmin, xs[k] - xs[k - 1]);
        }
        // Second-order one-sided slopes at both ends.
        const double h0 = xs[1] - xs[0];
        const double h1 = xs[2] - xs[1];
        const double hn0 = xs[n - 1] - xs[n - 2];
        const double hn1 = xs[n - 2] - xs[n - 3];
        const double left = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * fs[0] + (h0 + h1) / (h0 * h1) * fs[1] -
                            h0 / (h1 * (h0 + h1)) * fs[2];
        const double right = (2.0 * hn0 + hn1) / (hn0 * (hn0 + hn1)) * fs[n - 1] -
                             (hn0 + hn1) / (hn0 * hn1) * fs[n - 2] + hn0 / (hn1 * (hn0 + hn1)) * fs[n - 3];
        rep.endpoint_slopes_match = std::abs(left - right) <= 0.05 * fmax / hmin;
    }

    const double m3 = shape.has_analytic_moments() ? shape.m3() : rep.m3_quadrature;
    if (std::abs(rep.m1_quadrature) > rep.tau_mean) {
        rep.violation = "zero mean: |m1| = " + std::to_string(std::abs(rep.m1_quadrature)) + " exceeds tau_mean";
    } else if (!(std::abs(m3) > rep.tau_cubic)) {
        rep.violation = "nonzero cubic mean: |m3| = " + std::to_string(std::abs(m3)) + " is below tau_cubic";
    } else if (!rep.endpoint_values_match) {
        rep.violation = "endpoint values: F(0) != F(Lx)";
    } else if (!rep.endpoint_slopes_match) {
        rep.violation = "endpoint slopes: F'(0) != F'(Lx)";
    }
    rep.accepted = rep.violation.empty();
    return rep;
}

TravelingWaveParams make_traveling_wave(double A, double omega, double c)
{
    if (!std::isfinite(A) || !std::isfinite(omega) || !std::isfinite(c)) {
        throw ConfigError("traveling-wave parameters must be finite");
    }
    if (omega == 0.0) {
        throw ConfigError("traveling-wave frequency omega must be nonzero");
    }
    return TravelingWaveParams{A, omega, c};
}

WallActuation sample_wall_velocity(const ActuationShape& shape, double psi, const Grid& grid)
{
    WallActuation w;
    w.bottom = shape.wall_samples(grid);
    w.top.resize(w.bottom.size());
    for (std::size_t i = 0; i < w.bottom.size(); ++i) {
        w.bottom[i] *= psi;
        w.top[i] = -w.bottom[i];
    }
    return w;
}

WallActuation traveling_wave(const TravelingWaveParams& params, double t, const Grid& grid)
{
    WallActuation w;
    w.bottom.resize(grid.nx);
    w.top.resize(grid.nx);
    for (int i = 0; i < grid.nx; ++i) {
        w.bottom[i] = -2.0 * params.A * std::cos(params.omega * (grid.x(i) - params.c * t));
        w.top[i] = -w.bottom[i];
    }
    return w;
}

} // namespace chanflow
