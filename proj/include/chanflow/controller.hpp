#pragma once

#include "chanflow/actuation.hpp"
#include "chanflow/fields.hpp"

#include <limits>
#include <span>

namespace chanflow {

// Orientation of the map from the cubic root Psi to the wall amplitude psi.
// `published` is psi = -Psi / cbrt(m3). `energy_consistent` is psi = +Psi / cbrt(m3),
// the orientation under which the wall flux terms of dE/dt reduce to beta*Psi + Psi^3.
enum class PsiSign { published, energy_consistent };

struct ControllerConfig {
    double alpha = 1.0;
    ActuationShape shape;
    int delay_steps = 1;
    PsiSign sign = PsiSign::energy_consistent;
    double psi_max = std::numeric_limits<double>::infinity();
};

ControllerConfig make_controller_config(double alpha, const ActuationShape& shape, int delay_steps,
                                        PsiSign sign = PsiSign::energy_consistent,
                                        double psi_max = std::numeric_limits<double>::infinity());

struct ControlComputation {
    double E = 0.0;
    double coupling = 0.0;
    double beta = 0.0;
    double Gamma = 0.0;
    double q = 0.0;
    double discriminant = 0.0;
    double Psi = 0.0;
    double psi = 0.0;
    bool saturated = false;
};

double beta(std::span<const double> wall_p_bottom, std::span<const double> wall_p_top,
            const ActuationShape& shape, const Grid& grid);
double gamma(double E, double coupling, double alpha);
double q_coeff(double Gamma, double beta);
double cubic_discriminant(double beta, double q);
double cardano_root(double beta, double q);
double psi_from_root(double Psi, const ActuationShape& shape, PsiSign sign = PsiSign::published);

ControlComputation control_step(const DeviationState& dev, const EquilibriumProfile& profile,
                                const ControllerConfig& cfg);

} // namespace chanflow
