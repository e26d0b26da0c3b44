#include "chanflow/diagnostics.hpp"

#include "chanflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace chanflow {

namespace {

using std::numbers::pi;

struct Derivs {
    std::vector<double> fx;
    std::vector<double> fy;
    std::vector<double> lap;
};

Derivs rbf_derivatives(const ScalarField& f, const RbfBasis& basis)
{
    const Grid& g = f.grid();
    const Eigen::VectorXd w = basis.interpolate(f);
    const Eigen::VectorXd fx = basis.dx_matrix() * w;
    const Eigen::VectorXd fy = basis.dy_matrix() * w;
    const Eigen::VectorXd lap = basis.laplacian_matrix() * w;
    Derivs d{std::vector<double>(g.size()), std::vector<double>(g.size()), std::vector<double>(g.size())};
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int k = basis.center_of_node(i, j);
            const std::size_t n = g.index(i, j);
            d.fx[n] = fx(k);
            d.fy[n] = fy(k);
            d.lap[n] = lap(k);
        }
    }
    return d;
}

// Finite-difference weights for derivatives 0..m at z on nodes x (Fornberg).
std::vector<std::vector<double>> fd_weights(double z, const std::vector<double>& x, int m)
{
    const int n = static_cast<int>(x.size()) - 1;
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) {
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    return c;
}

Derivs fd_derivatives(const ScalarField& f)
{
    const Grid& g = f.grid();
    ensure(g.nx >= 6 && g.ny >= 6, "finite-difference backend needs at least 6 nodes per direction");
    const int px = g.nx - 1;
    const double hx = g.hx();
    const double hy = g.hy();
    Derivs d{std::vector<double>(g.size()), std::vector<double>(g.size()), std::vector<double>(g.size())};

    for (int j = 0; j < g.ny; ++j) {
        // Stencil of 6 consecutive rows, shifted to stay inside the wall-bounded direction.
        const int start = std::clamp(j - 3, 0, g.ny - 6);
        std::vector<double> ys(6);
        for (int s = 0; s < 6; ++s) {
            ys[s] = (start + s) * hy;
        }
        const auto wy = fd_weights(j * hy, ys, 2);
        for (int i = 0; i < g.nx; ++i) {
            auto at = [&](int ii) { return f(((ii % px) + px) % px, j); };
            const double fxx = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2)) /
                               (12.0 * hx * hx);
            double fy = 0.0;
            double fyy = 0.0;
            for (int s = 0; s < 6; ++s) {
                fy += wy[s][1] * f(i, start + s);
                fyy += wy[s][2] * f(i, start + s);
            }
            const std::size_t n = g.index(i, j);
            d.fx[n] = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * hx);
            d.fy[n] = fy;
            d.lap[n] = fxx + fyy;
        }
    }
    return d;
}

double integrate(const Grid& g, const std::vector<double>& vals)
{
    return trapz2(ScalarField(g, vals));
}

} // namespace

const IdentityEntry& IdentityReport::at(const std::string& name) const
{
    for (const auto& e : entries) {
        if (e.name == name) {
            return e;
        }
    }
    throw ContractViolation("identity report has no entry " + name);
}

IdentityReport check_energy_identities(const DeviationState& dev, double psi, const ActuationShape& shape,
                                       const EquilibriumProfile& profile, const IdentityOptions& options)
{
    const Grid& g = dev.u.grid();
    Derivs du, dv, dp;
    if (options.backend == DerivativeBackend::rbf) {
        std::shared_ptr<const RbfBasis> basis = options.basis;
        if (!basis || !(basis->grid() == g)) {
            basis = build_basis(g, options.c);
        }
        du = rbf_derivatives(dev.u, *basis);
        dv = rbf_derivatives(dev.v, *basis);
        dp = rbf_derivatives(dev.p, *basis);
    } else {
        du = fd_derivatives(dev.u);
        dv = fd_derivatives(dev.v);
        dp = fd_derivatives(dev.p);
    }

    const std::size_t n = g.size();
    const auto& u = dev.u.values();
    const auto& v = dev.v.values();
    std::vector<double> l(n), r(n), s(n);
    IdentityReport rep;
    auto add = [&](const std::string& name, double rhs) {
        IdentityEntry e;
        e.name = name;
        e.lhs = integrate(g, l);
        e.rhs = rhs;
        e.residual = std::abs(e.lhs - e.rhs);
        e.scale = integrate(g, s);
        rep.entries.push_back(e);
    };

    for (std::size_t k = 0; k < n; ++k) {
        l[k] = u[k] * du.lap[k];
        r[k] = -(du.fx[k] * du.fx[k] + du.fy[k] * du.fy[k]);
        s[k] = std::abs(l[k]) + std::abs(r[k]);
    }
    add("diffusion_u", integrate(g, r));

    for (std::size_t k = 0; k < n; ++k) {
        l[k] = v[k] * dv.lap[k];
        r[k] = -(dv.fx[k] * dv.fx[k] + dv.fy[k] * dv.fy[k]);
        s[k] = std::abs(l[k]) + std::abs(r[k]);
    }
    add("diffusion_v", integrate(g, r));

    const std::vector<double> F = shape.wall_samples(g);
    const std::vector<double> pb = dev.p.bottom_row();
    const std::vector<double> pt = dev.p.top_row();
    std::vector<double> wall(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) {
        wall[i] = F[i] * (pt[i] + pb[i]);
    }
    for (std::size_t k = 0; k < n; ++k) {
        l[k] = u[k] * dp.fx[k] + v[k] * dp.fy[k];
        s[k] = std::abs(u[k] * dp.fx[k]) + std::abs(v[k] * dp.fy[k]);
    }
    add("pressure", -psi * trapz_wall(wall, g));

    for (std::size_t k = 0; k < n; ++k) {
        l[k] = u[k] * (u[k] * du.fx[k] + v[k] * du.fy[k]);
        s[k] = std::abs(u[k]) * (std::abs(u[k] * du.fx[k]) + std::abs(v[k] * du.fy[k]));
    }
    add("convection_u", 0.0);

    for (std::size_t k = 0; k < n; ++k) {
        l[k] = v[k] * (u[k] * dv.fx[k] + v[k] * dv.fy[k]);
        s[k] = std::abs(v[k]) * (std::abs(u[k] * dv.fx[k]) + std::abs(v[k] * dv.fy[k]));
    }
    add("convection_v", -psi * psi * psi * shape.m3());

    for (int j = 0; j < g.ny; ++j) {
        const double ubar = poiseuille_velocity(profile, g.y(j));
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            l[k] = u[k] * ubar * du.fx[k];
            s[k] = std::abs(l[k]);
        }
    }
    add("mean_advection_u", 0.0);

    for (int j = 0; j < g.ny; ++j) {
        const double ubar = poiseuille_velocity(profile, g.y(j));
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            l[k] = v[k] * ubar * dv.fx[k];
            s[k] = std::abs(l[k]);
        }
    }
    add("mean_advection_v", 0.0);
    return rep;
}

ActuationShape smooth_test_shape(double Lx, int samples)
{
    std::vector<double> x(samples), F(samples);
    for (int k = 0; k < samples; ++k) {
        x[k] = (k == samples - 1) ? Lx : k * Lx / (samples - 1);
        F[k] = std::sin(2.0 * pi * x[k] / Lx) + std::cos(4.0 * pi * x[k] / Lx);
    }
    F.back() = F.front();
    return make_tabulated_shape(std::move(x), std::move(F));
}

DeviationState manufactured_deviation(const Grid& grid, double psi, double amplitude)
{
    const double Lx = grid.Lx;
    const double Ly = grid.Ly;
    const double kx = 2.0 * pi / Lx;
    const double ky = pi / Ly;
    auto F = [&](double x) { return std::sin(kx * x) + std::cos(2.0 * kx * x); };
    auto G = [&](double x) { return (1.0 - std::cos(kx * x)) / kx + std::sin(2.0 * kx * x) / (2.0 * kx); };

    // Stream function phi = -psi G(x) cos(ky y) + A sin(kx x) sin^2(ky y); u = phi_y, v = -phi_x.
    auto u = ScalarField::sample(grid, [&](double x, double y) {
        return psi * G(x) * ky * std::sin(ky * y) + amplitude * std::sin(kx * x) * ky * std::sin(2.0 * ky * y);
    });
    auto v = ScalarField::sample(grid, [&](double x, double y) {
        const double s = std::sin(ky * y);
        return psi * F(x) * std::cos(ky * y) - amplitude * kx * std::cos(kx * x) * s * s;
    });
    auto p = ScalarField::sample(grid, [&](double x, double y) {
        return (1.0 + y / Ly) * (std::sin(kx * x) + 0.5 * std::cos(2.0 * kx * x));
    });
    return DeviationState{std::move(u), std::move(v), std::move(p), 0.0};
}

std::vector<RateEntry> energy_rate_bound(const Trajectory& traj, const EquilibriumProfile& profile,
                                         const ActuationShape& shape, double alpha)
{
    std::vector<RateEntry> out;
    const double dt = traj.config.dt;
    const double m3 = shape.m3();
    for (std::size_t n = 0; n + 1 < traj.states.size(); ++n) {
        const DeviationState dev = deviation(traj.states[n], profile);
        const Grid& g = dev.p.grid();
        const std::vector<double> F = shape.wall_samples(g);
        const std::vector<double> pb = dev.p.bottom_row();
        const std::vector<double> pt = dev.p.top_row();
        std::vector<double> w(F.size());
        for (std::size_t i = 0; i < F.size(); ++i) {
            w[i] = F[i] * (pb[i] + pt[i]);
        }
        const double P = trapz_wall(w, g);
        const double coupling = coupling_integral(dev, profile);
        const double psi = traj.psi_applied[n + 1];

        RateEntry e;
        e.step = static_cast<int>(n);
        e.t = traj.states[n].t;
        e.rate = (traj.energies[n + 1].E - traj.energies[n].E) / dt;
        e.psi = psi;
        e.rhs_published = -coupling - P * psi - m3 * psi * psi * psi;
        e.rhs_flux = -coupling + P * psi + m3 * psi * psi * psi;
        e.alpha_E = alpha * traj.energies[n].E;
        e.gap = e.rate - e.rhs_published;
        e.gap_flux = e.rate - e.rhs_flux;
        out.push_back(e);
    }
    return out;
}

DecayReport decay_bound_check(const std::vector<EnergySample>& energies, double alpha, double tol)
{
    if (energies.empty()) {
        throw ContractViolation("decay check needs a non-empty energy series");
    }
    for (std::size_t n = 1; n < energies.size(); ++n) {
        ensure(energies[n].t > energies[n - 1].t, "energy series times must be strictly increasing");
    }

    DecayReport rep;
    rep.alpha = alpha;
    const double E0 = energies.front().E;
    const double t0 = energies.front().t;
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    int m = 0;
    for (std::size_t n = 0; n < energies.size(); ++n) {
        DecayEntry e;
        e.step = static_cast<int>(n);
        e.t = energies[n].t;
        e.E = energies[n].E;
        e.bound = E0 * std::exp(-alpha * (e.t - t0));
        if (e.bound > 0.0) {
            e.ratio = e.E / e.bound;
        } else {
            e.ratio = (e.E > 0.0) ? std::numeric_limits<double>::infinity() : 0.0;
        }
        e.violation = e.E > (1.0 + tol) * e.bound;
        rep.violations += e.violation ? 1 : 0;
        rep.max_ratio = std::max(rep.max_ratio, e.ratio);
        rep.entries.push_back(e);
        if (e.E > 0.0) {
            const double lg = std::log(e.E);
            st += e.t;
            sl += lg;
            stt += e.t * e.t;
            stl += e.t * lg;
            ++m;
        }
    }
    const double den = m * stt - st * st;
    rep.fitted_rate = (m >= 2 && den > 0.0) ? -(m * stl - st * sl) / den : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

double cubic_residual(double Psi, double beta, double q)
{
    return std::abs(Psi * Psi * Psi + beta * Psi + q);
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& value)
{
    ensure(h.size() == value.size() && h.size() >= 2, "order fit needs at least two matching samples");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double m = static_cast<double>(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double x = std::log(h[k]);
        const double y = std::log(value[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

} // namespace chanflow
