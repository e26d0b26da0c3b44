// Acceptance suite: one PASS/FAIL line per criterion, each at its stated tolerance.
//
// Exit status is 0 when the set of failing criteria equals the set passed with
// --expect-fail (empty by default).

#include "chanflow/controller.hpp"
#include "chanflow/diagnostics.hpp"
#include "chanflow/error.hpp"
#include "chanflow/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace chanflow;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

ExperimentSetup default_setup(const std::string& mode)
{
    return build_setup(parse_config("control.mode = " + mode + "\n"));
}

struct Runs {
    std::optional<Trajectory> open;
    std::optional<Trajectory> closed;
    std::string closed_error;
};

Runs& runs()
{
    static Runs r;
    return r;
}

Outcome criterion_1()
{
    const ExperimentSetup open = default_setup("open");
    const ExperimentSetup closed = default_setup("closed");
    runs().open = simulate(open.initial, open.options, open.solver);
    try {
        runs().closed = simulate(closed.initial, closed.options, closed.solver);
    } catch (const SolverFailure& e) {
        runs().closed_error = e.what();
        return {false, "closed loop failed at step " + std::to_string(e.step()) + ": " + e.what()};
    }
    const double Eo = runs().open->energies.back().E;
    const double Ec = runs().closed->energies.back().E;
    const double ratio = Ec / Eo;
    return {ratio <= 0.2, "E_closed/E_open = " + fmt(Ec) + "/" + fmt(Eo) + " = " + fmt(ratio) + " (need <= 0.2)"};
}

Outcome criterion_2()
{
    const ExperimentSetup s = build_setup(parse_config("control.mode = open\nic.preset = equilibrium\n"));
    const Trajectory tr = simulate(s.initial, s.options, s.solver);
    double Emax = 0.0;
    for (const EnergySample& e : tr.energies) {
        Emax = std::max(Emax, e.E);
    }
    const double res = steady_residual(s.profile, s.solver);
    const bool ok = tr.energies.size() == 251 && Emax <= 1e-8 && res <= 1e-6;
    return {ok, "max E over 250 steps = " + fmt(Emax) + ", steady residual = " + fmt(res)};
}

// Independent real-root finder for psi^3 + beta psi + q: bisection on a sign
// change inside the Cauchy bound.
double bisect_root(double beta, double q)
{
    auto f = [&](double x) { return (x * x + beta) * x + q; };
    double lo = -(1.0 + std::max(std::abs(beta), std::abs(q)));
    double hi = -lo;
    for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            break;
        }
        if ((f(mid) < 0.0) == (f(lo) < 0.0)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Counts sign changes of the cubic on a fine scan of the Cauchy interval.
int sign_changes(double beta, double q)
{
    auto f = [&](double x) { return (x * x + beta) * x + q; };
    const double B = 1.0 + std::max(std::abs(beta), std::abs(q));
    const int n = 4000;
    int count = 0;
    double prev = f(-B);
    for (int k = 1; k <= n; ++k) {
        const double cur = f(-B + 2.0 * B * k / n);
        if ((cur < 0.0) != (prev < 0.0)) {
            ++count;
        }
        prev = cur;
    }
    return count;
}

Outcome criterion_3()
{
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> expo(-4.0, 3.0);
    std::uniform_int_distribution<int> coin(0, 1);
    int bad_disc = 0;
    int bad_res = 0;
    int bad_root = 0;
    int bad_unique = 0;
    double worst_res = 0.0;
    double worst_root = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double Gamma = (k % 100 == 0) ? 0.0 : std::pow(10.0, expo(rng));
        const double beta = (coin(rng) ? 1.0 : -1.0) * std::pow(10.0, expo(rng));
        const double q = q_coeff(Gamma, beta);
        const double D = cubic_discriminant(beta, q);
        // Round-off band only at the exact double root Gamma = 0, beta < 0.
        const double slack = (Gamma == 0.0) ? 1e-14 * std::max({1.0, 0.25 * q * q, std::abs(beta * beta * beta) / 27.0})
                                            : 0.0;
        if (!(D >= -slack)) {
            ++bad_disc;
            continue;
        }
        const double Psi = cardano_root(beta, q);
        const double res = std::abs(Psi * Psi * Psi + beta * Psi + q) / std::max(1.0, std::abs(q));
        worst_res = std::max(worst_res, res);
        if (!(res <= 1e-9)) {
            ++bad_res;
        }
        if (D > 0.0) {
            const double ref = bisect_root(beta, q);
            const double err = std::abs(Psi - ref) / std::max(1.0, std::abs(ref));
            worst_root = std::max(worst_root, err);
            if (!(err <= 1e-8)) {
                ++bad_root;
            }
            if (sign_changes(beta, q) != 1) {
                ++bad_unique;
            }
        }
    }
    const bool ok = bad_disc == 0 && bad_res == 0 && bad_root == 0 && bad_unique == 0;
    return {ok, "10000 pairs: negative discriminant " + std::to_string(bad_disc) + ", residual misses " +
                    std::to_string(bad_res) + " (worst " + fmt(worst_res) + "), root mismatches " +
                    std::to_string(bad_root) + " (worst " + fmt(worst_root) + "), extra sign changes " +
                    std::to_string(bad_unique)};
}

Outcome criterion_4()
{
    const double root = cardano_root(3.0, 4.0);
    const double m3 = make_step_shape(1.0, 1.0 / 3.0, 1.0).m3();
    std::vector<double> h;
    std::vector<double> err;
    for (int n : {12, 24, 48}) {
        const ExperimentSetup s = build_setup(parse_config("geometry.nx = " + std::to_string(n) +
                                                           "\ngeometry.ny = " + std::to_string(n) + "\n"));
        h.push_back(s.grid.hx());
        err.push_back(std::abs(energy(deviation(s.initial, s.profile)).E - 19.0 / 60.0));
    }
    const double order = fitted_order(h, err);
    const bool ok = std::abs(root + 1.0) <= 1e-12 && std::abs(m3 - 0.25) <= 1e-12 && order >= 2.0;
    return {ok, "root(3,4) + 1 = " + fmt(root + 1.0) + ", m3 - 1/4 = " + fmt(m3 - 0.25) +
                    ", energy order = " + fmt(order) + " (errors " + fmt(err[0]) + ", " + fmt(err[1]) + ", " +
                    fmt(err[2]) + ")"};
}

double rel(double a, double b)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

Outcome criterion_5()
{
    // A realistic state: the start state advanced a few closed-loop steps.
    ExperimentSetup s = default_setup("closed");
    s.options.steps = 5;
    const Trajectory tr = simulate(s.initial, s.options, s.solver);
    const DeviationState dev = deviation(tr.states.back(), s.profile);
    const ControllerConfig& cfg = *s.options.controller;
    const ControlComputation base = control_step(dev, s.profile, cfg);

    double worst_gauge = 0.0;
    for (double kappa : {-1.0, 1e-3, 7.5}) {
        std::vector<double> p = dev.p.values();
        for (double& v : p) {
            v += kappa;
        }
        const DeviationState shifted{dev.u, dev.v, ScalarField(dev.p.grid(), p), dev.t};
        const ControlComputation c = control_step(shifted, s.profile, cfg);
        worst_gauge = std::max({worst_gauge, rel(c.E, base.E), rel(c.coupling, base.coupling),
                                rel(c.beta, base.beta),
                                rel(c.Gamma, base.Gamma), rel(c.q, base.q), rel(c.discriminant, base.discriminant),
                                rel(c.Psi, base.Psi), rel(c.psi, base.psi)});
    }

    const std::vector<double> F = cfg.shape.wall_samples(s.grid);
    double worst_scale = 0.0;
    for (double lambda : {-2.0, 0.5, 3.0}) {
        ControllerConfig scaled = cfg;
        scaled.shape = cfg.shape.scaled(lambda);
        const ControlComputation c = control_step(dev, s.profile, scaled);
        const std::vector<double> G = scaled.shape.wall_samples(s.grid);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < F.size(); ++i) {
            num = std::max(num, std::abs(G[i] * c.psi - F[i] * base.psi));
            den = std::max(den, std::abs(F[i] * base.psi));
        }
        worst_scale = std::max(worst_scale, num / den);
    }
    const bool ok = worst_gauge <= 1e-12 && worst_scale <= 1e-10;
    return {ok, "pressure shift: worst relative change " + fmt(worst_gauge) + " (<= 1e-12); shape scaling: worst " +
                    "relative wall-velocity change " + fmt(worst_scale) + " (<= 1e-10)"};
}

Outcome criterion_6()
{
    const double psi = 0.8;
    const ActuationShape shape = smooth_test_shape(1.0);
    const EquilibriumProfile profile;
    const std::vector<int> levels{12, 18, 24};
    std::vector<double> h;
    std::vector<IdentityReport> reports;
    for (int n : levels) {
        const Grid g = make_grid(n, n, 1.0, 1.0);
        h.push_back(g.hx());
        reports.push_back(check_energy_identities(manufactured_deviation(g, psi), psi, shape, profile));
    }

    bool ok = true;
    std::ostringstream detail;
    for (const IdentityEntry& e0 : reports.front().entries) {
        std::vector<double> res;
        double scale = 1.0;
        for (const IdentityReport& r : reports) {
            res.push_back(r.at(e0.name).residual);
            scale = std::max(scale, r.at(e0.name).scale);
        }
        const bool roundoff = std::all_of(res.begin(), res.end(), [&](double v) { return v <= 1e-12 * scale; });
        const bool monotone = res[0] > res[1] && res[1] > res[2];
        const double order = roundoff ? std::numeric_limits<double>::quiet_NaN() : fitted_order(h, res);
        const bool converged = roundoff || (monotone && order >= 1.0);
        ok = ok && converged;
        detail << e0.name << (roundoff ? " round-off " + fmt(res[2]) : " order " + fmt(order))
               << (converged ? "" : " [not converged]") << "; ";
    }

    // convection_v at 24x24 against the fitted model residual = C h^p.
    std::vector<double> res;
    for (const IdentityReport& r : reports) {
        res.push_back(r.at("convection_v").residual);
    }
    const double p = fitted_order(h, res);
    double logC = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        logC += std::log(res[k]) - p * std::log(h[k]);
    }
    const double model = std::exp(logC / h.size()) * std::pow(h.back(), p);
    const IdentityEntry& cv = reports.back().at("convection_v");
    const double target = -psi * psi * psi * shape.m3();
    const bool within = std::abs(cv.lhs - target) <= 2.0 * model;
    ok = ok && within;
    detail << "convection_v at 24: lhs " << fmt(cv.lhs) << " vs target " << fmt(target) << ", |diff| "
           << fmt(std::abs(cv.lhs - target)) << " <= 2 x model, model = " << fmt(model);
    return {ok, detail.str()};
}

Outcome criterion_7()
{
    if (!runs().closed) {
        return {false, "no closed-loop trajectory (" + runs().closed_error + ")"};
    }
    const DecayReport rep = decay_bound_check(runs().closed->energies, 1.0, 0.1);
    const bool ratios = rep.entries.size() == runs().closed->energies.size() &&
                        std::all_of(rep.entries.begin(), rep.entries.end(),
                                    [](const DecayEntry& e) { return std::isfinite(e.ratio); });
    const bool ok = rep.fitted_rate > 0.0 && ratios;
    return {ok, "fitted decay rate " + fmt(rep.fitted_rate) + " (> 0); report rows " +
                    std::to_string(rep.entries.size()) + ", bound exceeded at " + std::to_string(rep.violations) +
                    " steps (reported, not asserted), max ratio " + fmt(rep.max_ratio)};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    std::vector<int> expect_fail;
    app.add_option("--expect-fail", expect_fail, "criteria known to fail");
    CLI11_PARSE(app, argc, argv);

    Outcome (*const checks[])() = {criterion_1, criterion_2, criterion_3, criterion_4,
                                   criterion_5, criterion_6, criterion_7};
    std::set<int> failed;
    for (int k = 0; k < 7; ++k) {
        Outcome o;
        try {
            o = checks[k]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("Criterion %d: %s  %s\n", k + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) {
            failed.insert(k + 1);
        }
    }
    const std::set<int> expected(expect_fail.begin(), expect_fail.end());
    if (failed == expected) {
        if (!expected.empty()) {
            std::printf("Failing criteria match the expected set.\n");
        }
        return 0;
    }
    std::printf("Failing criteria differ from the expected set.\n");
    return 1;
}
