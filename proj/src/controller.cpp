#include "chanflow/controller.hpp"

#include "chanflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace chanflow {

namespace {

constexpr double kCubicWeight = 0.38490017945975050; // 2*sqrt(3)/9

double cube_root_of_m3(const ActuationShape& shape)
{
    if (shape.m3() == 0.0) {
        throw DegenerateShapeError("cubic mean of F is zero");
    }
    return std::cbrt(shape.m3());
}

} // namespace

ControllerConfig make_controller_config(double alpha, const ActuationShape& shape, int delay_steps, PsiSign sign,
                                        double psi_max)
{
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("alpha must be > 0");
    }
    if (delay_steps < 1) {
        throw ConfigError("delay_steps must be >= 1");
    }
    if (!(psi_max > 0.0)) {
        throw ConfigError("psi_max must be > 0");
    }
    if (shape.m3() == 0.0) {
        throw DegenerateShapeError("cubic mean of F is zero");
    }
    return ControllerConfig{alpha, shape, delay_steps, sign, psi_max};
}

double beta(std::span<const double> wall_p_bottom, std::span<const double> wall_p_top,
            const ActuationShape& shape, const Grid& grid)
{
    const double cm = cube_root_of_m3(shape);
    ensure(wall_p_bottom.size() == wall_p_top.size(), "wall pressure rows differ in length");
    const std::vector<double> F = shape.wall_samples(grid);
    ensure(F.size() == wall_p_bottom.size(), "wall pressure row length differs from grid nx");
    std::vector<double> w(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) {
        w[i] = F[i] * (wall_p_bottom[i] + wall_p_top[i]);
    }
    return trapz_wall(w, grid) / cm;
}

double gamma(double E, double coupling, double alpha)
{
    ensure(E >= 0.0, "energy must be non-negative");
    ensure(alpha > 0.0, "alpha must be positive");
    return alpha * E + std::abs(coupling);
}

double q_coeff(double Gamma, double beta)
{
    ensure(Gamma >= 0.0, "Gamma must be non-negative");
    const double ab = std::abs(beta);
    return Gamma + kCubicWeight * ab * std::sqrt(ab);
}

double cubic_discriminant(double beta, double q)
{
    return 0.25 * q * q + beta * beta * beta / 27.0;
}

double cardano_root(double beta, double q)
{
    if (beta == 0.0 && q == 0.0) {
        return 0.0;
    }
    double d = cubic_discriminant(beta, q);
    if (d < 0.0) {
        const double scale = std::max({1.0, 0.25 * q * q, std::abs(beta * beta * beta) / 27.0});
        if (d < -1e-14 * scale) {
            throw ContractViolation("negative cubic discriminant " + std::to_string(d) +
                                    ": three real roots, Cardano form undefined");
        }
        d = 0.0;
    }
    // The two cube roots are paired so that their product is -beta/3.
    const double t = -0.5 * q - std::copysign(std::sqrt(d), q);
    const double A = std::cbrt(t);
    if (A == 0.0) {
        return 0.0;
    }
    const double B = -beta / (3.0 * A);
    return A + B;
}

double psi_from_root(double Psi, const ActuationShape& shape, PsiSign sign)
{
    const double cm = cube_root_of_m3(shape);
    return (sign == PsiSign::published) ? -Psi / cm : Psi / cm;
}

ControlComputation control_step(const DeviationState& dev, const EquilibriumProfile& profile,
                                const ControllerConfig& cfg)
{
    const Grid& g = dev.p.grid();
    ControlComputation c;
    c.E = energy(dev).E;
    c.coupling = coupling_integral(dev, profile);
    c.beta = beta(dev.p.bottom_row(), dev.p.top_row(), cfg.shape, g);
    c.Gamma = gamma(c.E, c.coupling, cfg.alpha);
    c.q = q_coeff(c.Gamma, c.beta);

    // Sum of non-negative terms; algebraically q^2/4 + beta^3/27.
    const double ab = std::abs(c.beta);
    c.discriminant = 0.25 * c.Gamma * c.Gamma + 0.5 * kCubicWeight * c.Gamma * ab * std::sqrt(ab) +
                     (ab * ab * ab + c.beta * c.beta * c.beta) / 27.0;
    if (c.E > 0.0 && !(c.discriminant > 0.0)) {
        throw ContractViolation("discriminant not positive although E > 0");
    }

    c.Psi = cardano_root(c.beta, c.q);
    c.psi = psi_from_root(c.Psi, cfg.shape, cfg.sign);
    if (std::abs(c.psi) > cfg.psi_max) {
        c.psi = std::copysign(cfg.psi_max, c.psi);
        c.saturated = true;
    }
    return c;
}

} // namespace chanflow
