#include "chanflow/csv.hpp"

#include "chanflow/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

namespace chanflow {

namespace fs = std::filesystem;

const char* const kTraceHeader = "step,t,E,bound,coupling,beta,Gamma,q,discriminant,Psi,psi,solve_residual";

namespace {

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    return out;
}

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    return in;
}

double parse_real(const std::string& s, const fs::path& path)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw ConfigError("malformed number '" + s + "' in " + path.string());
    }
    return v;
}

std::map<std::string, std::size_t> header_index(const std::string& line)
{
    std::map<std::string, std::size_t> idx;
    const auto cols = split_csv_line(line);
    for (std::size_t k = 0; k < cols.size(); ++k) {
        idx[cols[k]] = k;
    }
    return idx;
}

std::size_t column(const std::map<std::string, std::size_t>& idx, const std::string& name, const fs::path& path)
{
    auto it = idx.find(name);
    if (it == idx.end()) {
        throw ConfigError(path.string() + " lacks column '" + name + "'");
    }
    return it->second;
}

} // namespace

std::string format_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r' && ch != ' ' && ch != '\t') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

void write_snapshot(const fs::path& path, const FlowState& state, const EquilibriumProfile& profile)
{
    const DeviationState dev = deviation(state, profile);
    const Grid& g = state.U.grid();
    std::ofstream out = open_out(path);
    out << "x,y,U,V,P,u,v,p\n";
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            out << format_real(g.x(i)) << ',' << format_real(g.y(j)) << ',' << format_real(state.U(i, j)) << ','
                << format_real(state.V(i, j)) << ',' << format_real(state.P(i, j)) << ','
                << format_real(dev.u(i, j)) << ',' << format_real(dev.v(i, j)) << ',' << format_real(dev.p(i, j))
                << '\n';
        }
    }
}

FlowState read_snapshot(const fs::path& path, const Grid& grid)
{
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError(path.string() + " is empty");
    }
    const auto idx = header_index(line);
    const std::size_t cx = column(idx, "x", path), cy = column(idx, "y", path);
    const std::size_t cU = column(idx, "U", path), cV = column(idx, "V", path), cP = column(idx, "P", path);

    std::vector<double> U, V, P;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        const std::size_t k = U.size();
        if (k >= grid.size()) {
            throw ConfigError(path.string() + " has more rows than grid nodes");
        }
        const int i = static_cast<int>(k % grid.nx);
        const int j = static_cast<int>(k / grid.nx);
        const double tol = 1e-9 * std::max(grid.Lx, grid.Ly);
        if (std::abs(parse_real(f.at(cx), path) - grid.x(i)) > tol ||
            std::abs(parse_real(f.at(cy), path) - grid.y(j)) > tol) {
            throw ConfigError(path.string() + ": node coordinates do not match the configured grid");
        }
        U.push_back(parse_real(f.at(cU), path));
        V.push_back(parse_real(f.at(cV), path));
        P.push_back(parse_real(f.at(cP), path));
    }
    if (U.size() != grid.size()) {
        throw ConfigError(path.string() + " has " + std::to_string(U.size()) + " rows, grid needs " +
                          std::to_string(grid.size()));
    }
    return FlowState{ScalarField(grid, std::move(U)), ScalarField(grid, std::move(V)), ScalarField(grid, std::move(P)),
                     0.0, 0};
}

TraceRow make_trace_row(const Trajectory& traj, std::size_t n, double alpha)
{
    TraceRow r;
    r.step = static_cast<int>(n);
    r.t = traj.states[n].t;
    r.E = traj.energies[n].E;
    r.bound = traj.energies.front().E * std::exp(-alpha * r.t);
    const ControlComputation& c = traj.controls[n];
    r.coupling = c.coupling;
    r.beta = c.beta;
    r.Gamma = c.Gamma;
    r.q = c.q;
    r.discriminant = c.discriminant;
    r.Psi = c.Psi;
    r.psi = c.psi;
    r.solve_residual = traj.stats[n].residual;
    if (!traj.has_control[n]) {
        r.coupling = coupling_integral(deviation(traj.states[n], traj.config.profile), traj.config.profile);
    }
    return r;
}

std::string trace_line(const TraceRow& r, bool has_control)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto ctl = [&](double v) { return format_real(has_control ? v : nan); };
    std::ostringstream os;
    os << r.step << ',' << format_real(r.t) << ',' << format_real(r.E) << ',' << format_real(r.bound) << ','
       << format_real(r.coupling) << ',' << ctl(r.beta) << ',' << ctl(r.Gamma) << ',' << ctl(r.q) << ','
       << ctl(r.discriminant) << ',' << ctl(r.Psi) << ',' << ctl(r.psi) << ',' << format_real(r.solve_residual);
    return os.str();
}

std::vector<TraceRow> read_trace(const fs::path& path)
{
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError(path.string() + " is empty");
    }
    const auto idx = header_index(line);
    const std::size_t cs = column(idx, "step", path), ct = column(idx, "t", path), cE = column(idx, "E", path);
    auto opt = [&](const char* name) {
        auto it = idx.find(name);
        return it == idx.end() ? std::string::npos : it->second;
    };
    const std::size_t cols[] = {opt("bound"), opt("coupling"), opt("beta"), opt("Gamma"), opt("q"),
                                opt("discriminant"), opt("Psi"), opt("psi"), opt("solve_residual")};

    std::vector<TraceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        TraceRow r;
        r.step = static_cast<int>(parse_real(f.at(cs), path));
        r.t = parse_real(f.at(ct), path);
        r.E = parse_real(f.at(cE), path);
        double* dst[] = {&r.bound, &r.coupling, &r.beta, &r.Gamma, &r.q, &r.discriminant, &r.Psi, &r.psi,
                         &r.solve_residual};
        for (std::size_t k = 0; k < 9; ++k) {
            if (cols[k] != std::string::npos) {
                *dst[k] = parse_real(f.at(cols[k]), path);
            }
        }
        rows.push_back(r);
    }
    return rows;
}

void write_identity_report(const fs::path& path, const IdentityReport& report)
{
    std::ofstream out = open_out(path);
    out << "identity,lhs,rhs,residual,scale\n";
    for (const auto& e : report.entries) {
        out << e.name << ',' << format_real(e.lhs) << ',' << format_real(e.rhs) << ',' << format_real(e.residual)
            << ',' << format_real(e.scale) << '\n';
    }
}

void write_decay_report(const fs::path& path, const DecayReport& report)
{
    std::ofstream out = open_out(path);
    out << "step,t,E,bound,ratio,violation\n";
    for (const auto& e : report.entries) {
        out << e.step << ',' << format_real(e.t) << ',' << format_real(e.E) << ',' << format_real(e.bound) << ','
            << format_real(e.ratio) << ',' << (e.violation ? 1 : 0) << '\n';
    }
}

void write_rate_report(const fs::path& path, const std::vector<RateEntry>& entries)
{
    std::ofstream out = open_out(path);
    out << "step,t,rate,rhs_published,rhs_flux,alpha_E,psi\n";
    for (const auto& e : entries) {
        out << e.step << ',' << format_real(e.t) << ',' << format_real(e.rate) << ',' << format_real(e.rhs_published)
            << ',' << format_real(e.rhs_flux) << ',' << format_real(e.alpha_E) << ',' << format_real(e.psi) << '\n';
    }
}

void write_moment_report(const fs::path& path, const MomentReport& r)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::ofstream out = open_out(path);
    out << "quantity,value\n";
    out << "m1_quadrature," << format_real(r.m1_quadrature) << '\n';
    out << "m3_quadrature," << format_real(r.m3_quadrature) << '\n';
    out << "m1_analytic," << format_real(r.m1_analytic.value_or(nan)) << '\n';
    out << "m3_analytic," << format_real(r.m3_analytic.value_or(nan)) << '\n';
    out << "tau_mean," << format_real(r.tau_mean) << '\n';
    out << "tau_cubic," << format_real(r.tau_cubic) << '\n';
    out << "endpoint_values_match," << (r.endpoint_values_match ? 1 : 0) << '\n';
    out << "endpoint_slopes_match," << (r.endpoint_slopes_match ? 1 : 0) << '\n';
    out << "accepted," << (r.accepted ? 1 : 0) << '\n';
}

ActuationShape read_shape_csv(const fs::path& path)
{
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError(path.string() + " is empty");
    }
    const auto idx = header_index(line);
    const std::size_t cx = column(idx, "x", path), cF = column(idx, "F", path);
    std::vector<double> x, F;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        x.push_back(parse_real(f.at(cx), path));
        F.push_back(parse_real(f.at(cF), path));
    }
    return make_tabulated_shape(std::move(x), std::move(F));
}

} // namespace chanflow
