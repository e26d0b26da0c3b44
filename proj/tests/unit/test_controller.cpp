#include "chanflow/controller.hpp"
#include "chanflow/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace chanflow;
using doctest::Approx;

namespace {

const ActuationShape kStep = make_step_shape(1.0, 1.0 / 3.0, 1.0);

DeviationState random_deviation(const Grid& g, std::mt19937_64& rng, double amp)
{
    std::uniform_real_distribution<double> U(-amp, amp);
    auto rnd = [&](double, double) { return U(rng); };
    return DeviationState{ScalarField::sample(g, rnd), ScalarField::sample(g, rnd), ScalarField::sample(g, rnd), 0.0};
}

} // namespace

TEST_CASE("beta vanishes for constant wall pressure")
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    const std::vector<double> c(12, 3.7);
    CHECK(std::abs(beta(c, c, kStep, g)) < 1e-14);
}

TEST_CASE("beta with wall pressure equal to F approaches the cube root of 4")
{
    const double target = std::cbrt(4.0);
    double prev = 1.0;
    for (int n : {13, 49, 193, 769}) {
        const Grid g = make_grid(n, 3, 1.0, 1.0);
        std::vector<double> p(n);
        for (int i = 0; i < n; ++i) {
            p[i] = kStep.value(g.x(i));
        }
        const double err = std::abs(beta(p, p, kStep, g) - target);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 5e-3);
}

TEST_CASE("beta is unchanged by a constant pressure shift")
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> pb(12);
    std::vector<double> pt(12);
    for (int i = 0; i < 12; ++i) {
        pb[i] = U(rng);
        pt[i] = U(rng);
    }
    const double b0 = beta(pb, pt, kStep, g);
    for (double kappa : {-3.0, 0.01, 250.0}) {
        std::vector<double> qb = pb;
        std::vector<double> qt = pt;
        for (int i = 0; i < 12; ++i) {
            qb[i] += kappa;
            qt[i] += kappa;
        }
        CHECK(beta(qb, qt, kStep, g) == Approx(b0).epsilon(1e-12 * std::max(1.0, std::abs(kappa))));
    }
}

TEST_CASE("gamma and q coefficient")
{
    CHECK(gamma(0.0, 0.0, 1.7) == 0.0);
    CHECK(gamma(0.3, -0.1, 1.0) == Approx(0.4).epsilon(1e-15));
    CHECK(gamma(0.3, 0.1, 2.0) == Approx(0.7).epsilon(1e-15));
    CHECK(q_coeff(1.0, 0.0) == 1.0);
    const double ref = 4.07920143567800407738;
    CHECK(q_coeff(1.0, 4.0) == Approx(ref).epsilon(1e-15));
    CHECK(q_coeff(1.0, -4.0) == Approx(ref).epsilon(1e-15));
    CHECK_THROWS_AS(q_coeff(-1.0, 0.0), ContractViolation);
}

TEST_CASE("cardano root spot values")
{
    CHECK(cardano_root(0.0, 0.0) == 0.0);
    CHECK(cardano_root(0.0, -2.0) == Approx(1.25992104989487316477).epsilon(1e-14));
    CHECK(std::abs(cardano_root(3.0, 4.0) + 1.0) <= 1e-12);
    // Double root at zero discriminant: psi^3 - 3 psi + 2 = (psi - 1)^2 (psi + 2).
    CHECK(cardano_root(-3.0, 2.0) == Approx(-2.0).epsilon(1e-12));
    // Sign behaviour with beta = 0.
    CHECK(cardano_root(0.0, 8.0) == Approx(-2.0).epsilon(1e-15));
    CHECK_THROWS_AS(cardano_root(-3.0, 0.0), ContractViolation);
}

TEST_CASE("psi from root")
{
    CHECK(psi_from_root(0.0, kStep) == 0.0);
    CHECK(psi_from_root(0.5, kStep) == Approx(-0.79370052598409973738).epsilon(1e-14));
    const ActuationShape neg = make_step_shape(-std::cbrt(32.0), 1.0 / 3.0, 1.0);
    REQUIRE(neg.m3() == Approx(-8.0).epsilon(1e-14));
    CHECK(psi_from_root(1.0, neg) == Approx(0.5).epsilon(1e-14));
    CHECK(psi_from_root(0.5, kStep, PsiSign::energy_consistent) ==
          Approx(0.79370052598409973738).epsilon(1e-14));
}

TEST_CASE("control at equilibrium is zero")
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    const ScalarField z = ScalarField::zeros(g);
    const ControllerConfig cfg = make_controller_config(1.0, kStep, 1);
    const ControlComputation c = control_step(DeviationState{z, z, z, 0.0}, EquilibriumProfile{}, cfg);
    CHECK(c.beta == 0.0);
    CHECK(c.Gamma == 0.0);
    CHECK(c.q == 0.0);
    CHECK(c.Psi == 0.0);
    CHECK(c.psi == 0.0);
    CHECK_FALSE(c.saturated);
}

TEST_CASE("control on random deviations: positive discriminant and exact root")
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    std::mt19937_64 rng(2024);
    for (PsiSign sign : {PsiSign::published, PsiSign::energy_consistent}) {
        const ControllerConfig cfg = make_controller_config(1.0, kStep, 1, sign);
        for (int trial = 0; trial < 200; ++trial) {
            const double amp = std::pow(10.0, -3.0 + 4.0 * (trial % 10) / 9.0);
            const ControlComputation c = control_step(random_deviation(g, rng, amp), EquilibriumProfile{}, cfg);
            CHECK(c.E > 0.0);
            CHECK(c.discriminant > 0.0);
            const double res = std::abs(c.Psi * c.Psi * c.Psi + c.beta * c.Psi + c.q);
            CHECK(res <= 1e-9 * std::max(1.0, std::abs(c.q)));
            CHECK(c.discriminant == Approx(cubic_discriminant(c.beta, c.q)).epsilon(1e-9));
        }
    }
}

TEST_CASE("saturation marks the computation")
{
    const Grid g = make_grid(12, 12, 1.0, 1.0);
    std::mt19937_64 rng(11);
    const DeviationState d = random_deviation(g, rng, 1.0);
    const ControllerConfig free = make_controller_config(1.0, kStep, 1);
    const ControllerConfig capped = make_controller_config(1.0, kStep, 1, PsiSign::energy_consistent, 0.01);
    const ControlComputation a = control_step(d, EquilibriumProfile{}, free);
    const ControlComputation b = control_step(d, EquilibriumProfile{}, capped);
    CHECK(std::abs(a.psi) > 0.01);
    CHECK(std::abs(b.psi) == 0.01);
    CHECK(std::signbit(a.psi) == std::signbit(b.psi));
    CHECK(b.saturated);
}

TEST_CASE("controller configuration errors")
{
    CHECK_THROWS_AS(make_controller_config(-1.0, kStep, 1), ConfigError);
    CHECK_THROWS_AS(make_controller_config(1.0, kStep, 0), ConfigError);
    CHECK_THROWS_AS(make_controller_config(1.0, kStep, 1, PsiSign::published, 0.0), ConfigError);
}
