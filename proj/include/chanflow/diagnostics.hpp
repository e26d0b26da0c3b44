#pragma once

#include "chanflow/actuation.hpp"
#include "chanflow/fields.hpp"
#include "chanflow/rbf_basis.hpp"
#include "chanflow/solver.hpp"

#include <memory>
#include <string>
#include <vector>

namespace chanflow {

enum class DerivativeBackend { rbf, finite_difference };

struct IdentityOptions {
    DerivativeBackend backend = DerivativeBackend::rbf;
    double c = 0.11;
    std::shared_ptr<const RbfBasis> basis;
};

struct IdentityEntry {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double scale = 0.0;
};

struct IdentityReport {
    std::vector<IdentityEntry> entries;

    const IdentityEntry& at(const std::string& name) const;
};

IdentityReport check_energy_identities(const DeviationState& dev, double psi, const ActuationShape& shape,
                                       const EquilibriumProfile& profile, const IdentityOptions& options = {});

// Smooth admissible wall profile F(x) = sin(2 pi x/Lx) + cos(4 pi x/Lx), tabulated
// finely enough that its cached moments are accurate to ~1e-8.
ActuationShape smooth_test_shape(double Lx, int samples = 4001);

// Divergence-free deviation built from a stream function; u vanishes on both
// walls and v equals +F psi at y = 0 and -F psi at y = Ly for the smooth test shape.
DeviationState manufactured_deviation(const Grid& grid, double psi, double amplitude = 0.5);

struct RateEntry {
    int step = 0;
    double t = 0.0;
    double rate = 0.0;
    double rhs_published = 0.0;
    double rhs_flux = 0.0;
    double alpha_E = 0.0;
    double psi = 0.0;
    double gap = 0.0;
    double gap_flux = 0.0;
};

std::vector<RateEntry> energy_rate_bound(const Trajectory& traj, const EquilibriumProfile& profile,
                                         const ActuationShape& shape, double alpha = 1.0);

struct DecayEntry {
    int step = 0;
    double t = 0.0;
    double E = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
    bool violation = false;
};

struct DecayReport {
    std::vector<DecayEntry> entries;
    int violations = 0;
    double max_ratio = 0.0;
    double alpha = 0.0;
    double fitted_rate = 0.0;
};

DecayReport decay_bound_check(const std::vector<EnergySample>& energies, double alpha, double tol = 0.1);

double cubic_residual(double Psi, double beta, double q);

// Least-squares slope of log(value) against log(h).
double fitted_order(const std::vector<double>& h, const std::vector<double>& value);

} // namespace chanflow
