#include "chanflow/experiment.hpp"

#include "chanflow/error.hpp"
#include "chanflow/svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

namespace chanflow {

namespace fs = std::filesystem;

namespace {

ActuationShape configured_shape(const ExperimentConfig& cfg)
{
    if (cfg.shape_kind == "tabulated") {
        return read_shape_csv(cfg.shape_file);
    }
    return make_step_shape(cfg.theta, cfg.epsilon, cfg.Lx);
}

RunMode parse_mode(const std::string& mode)
{
    if (mode == "open") {
        return RunMode::open_loop;
    }
    if (mode == "closed") {
        return RunMode::closed_loop;
    }
    if (mode == "wave") {
        return RunMode::wave;
    }
    throw ConfigError("control.mode: unknown mode '" + mode + "'");
}

std::string snapshot_name(int n)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%05d.csv", n);
    return buf;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

// State the observer keeps while the run is in flight.
struct RunRecorder {
    std::ofstream trace;
    double alpha = 1.0;
    int snapshot_every = 0;
    fs::path dir;
    EquilibriumProfile profile;
    std::vector<EnergySample> energies;
    std::vector<SolveStats> stats;
    std::vector<fs::path> snapshots;
    int saturated = 0;
    std::optional<FlowState> last;

    void observe(const Trajectory& tr)
    {
        const std::size_t n = tr.states.size() - 1;
        const TraceRow row = make_trace_row(tr, n, alpha);
        trace << trace_line(row, tr.has_control[n]) << '\n';
        trace.flush();
        energies.push_back(tr.energies[n]);
        stats.push_back(tr.stats[n]);
        if (tr.has_control[n] && tr.controls[n].saturated) {
            ++saturated;
        }
        last = tr.states[n];
        const int step = static_cast<int>(n);
        if (step == 0 || (snapshot_every > 0 && step % snapshot_every == 0)) {
            snapshot(tr.states[n]);
        }
    }

    void snapshot(const FlowState& s)
    {
        const fs::path p = dir / snapshot_name(s.n);
        if (std::find(snapshots.begin(), snapshots.end(), p) != snapshots.end()) {
            return;
        }
        write_snapshot(p, s, profile);
        snapshots.push_back(p);
    }
};

void fill_summary(RunSummary& s, const RunRecorder& rec, double alpha)
{
    if (rec.energies.empty()) {
        return;
    }
    s.steps_completed = static_cast<int>(rec.energies.size()) - 1;
    s.E_initial = rec.energies.front().E;
    s.E_final = rec.energies.back().E;
    const DecayReport decay = decay_bound_check(rec.energies, alpha);
    s.fitted_rate = decay.fitted_rate;
    s.violations = decay.violations;
    s.max_ratio = decay.max_ratio;
    double sum = 0.0;
    int count = 0;
    for (std::size_t n = 1; n < rec.stats.size(); ++n) {
        const SolveStats& st = rec.stats[n];
        s.residual_max = std::max(s.residual_max, st.residual);
        s.momentum_residual_max = std::max(s.momentum_residual_max, st.momentum_residual);
        s.condition_max = std::max(s.condition_max, st.condition);
        sum += st.residual;
        ++count;
    }
    s.residual_mean = count > 0 ? sum / count : 0.0;
    s.saturated_steps = rec.saturated;
}

nlohmann::json summary_json(const RunSummary& s)
{
    nlohmann::json j;
    j["status"] = s.ok ? "ok" : "failed";
    j["failed_step"] = s.failed_step;
    j["message"] = s.message;
    j["steps_completed"] = s.steps_completed;
    j["E_initial"] = s.E_initial;
    j["E_final"] = s.E_final;
    j["fitted_rate"] = s.fitted_rate;
    j["violations"] = s.violations;
    j["max_ratio"] = s.max_ratio;
    j["residual_max"] = s.residual_max;
    j["residual_mean"] = s.residual_mean;
    j["momentum_residual_max"] = s.momentum_residual_max;
    j["condition_max"] = s.condition_max;
    j["saturated_steps"] = s.saturated_steps;
    return j;
}

} // namespace

FlowState initial_state(const ExperimentConfig& cfg, const Grid& grid, const EquilibriumProfile& profile)
{
    if (cfg.ic_preset == "paper") {
        const double k = 4.0 * std::numbers::pi / cfg.Lx;
        const double slope = -4.0 / cfg.R;
        return FlowState{ScalarField::zeros(grid),
                         ScalarField::sample(grid, [k](double x, double) { return std::sin(k * x); }),
                         ScalarField::sample(grid, [slope](double x, double) { return slope * x; }), 0.0, 0};
    }
    if (cfg.ic_preset == "equilibrium") {
        return sample_equilibrium(grid, profile);
    }
    if (cfg.ic_preset == "file") {
        return read_snapshot(cfg.ic_file, grid);
    }
    throw ConfigError("ic.preset: unknown preset '" + cfg.ic_preset + "'");
}

ExperimentSetup build_setup(const ExperimentConfig& cfg)
{
    const Grid grid = make_grid(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
    const EquilibriumProfile profile = make_profile(cfg.R, cfg.a, cfg.b, cfg.Ly);
    const SolveStrategy strategy =
        cfg.solve_strategy == "direct-square" ? SolveStrategy::direct_square : SolveStrategy::least_squares;

    ExperimentSetup setup{grid, profile,
                          make_solver_config(grid, cfg.c, cfg.dt, profile, strategy, cfg.oversampling, cfg.gauge_node),
                          SimulationOptions{}, initial_state(cfg, grid, profile), std::nullopt};
    setup.options.mode = parse_mode(cfg.mode);
    setup.options.steps = cfg.steps;
    if (setup.options.mode == RunMode::wave) {
        setup.options.wave = make_traveling_wave(cfg.wave_A, cfg.wave_omega, cfg.wave_c);
    } else {
        setup.shape = configured_shape(cfg);
        const PsiSign sign = cfg.psi_sign == "published" ? PsiSign::published : PsiSign::energy_consistent;
        setup.options.controller = make_controller_config(cfg.alpha, *setup.shape, cfg.delay_steps, sign, cfg.psi_max);
    }
    return setup;
}

RunArtifacts run_experiment(const ExperimentConfig& cfg)
{
    ExperimentSetup setup = build_setup(cfg);

    RunArtifacts art;
    art.directory = cfg.output_directory;
    fs::create_directories(art.directory);
    write_text(art.directory / "config.cfg", serialize_config(cfg));

    art.trace = art.directory / "trace.csv";
    art.summary_file = art.directory / "summary.json";

    RunRecorder rec;
    rec.trace.open(art.trace, std::ios::binary);
    if (!rec.trace) {
        throw Error("cannot write " + art.trace.string());
    }
    rec.trace << kTraceHeader << '\n';
    rec.alpha = cfg.alpha;
    rec.snapshot_every = cfg.snapshot_every;
    rec.dir = art.directory;
    rec.profile = setup.profile;

    auto finish = [&](RunSummary& summary) {
        fill_summary(summary, rec, cfg.alpha);
        if (!rec.energies.empty()) {
            write_decay_report(art.directory / "decay.csv", decay_bound_check(rec.energies, cfg.alpha));
        }
        write_text(art.summary_file, summary_json(summary).dump(2) + "\n");
        art.snapshots = rec.snapshots;
        art.summary = summary;
    };

    try {
        Trajectory traj =
            simulate(setup.initial, setup.options, setup.solver, [&rec](const Trajectory& t) { rec.observe(t); });
        rec.trace.close();
        rec.snapshot(traj.states.back());
        if (setup.shape) {
            write_rate_report(art.directory / "rate.csv",
                              energy_rate_bound(traj, setup.profile, *setup.shape, cfg.alpha));
        }
        write_text(art.directory / "final.svg", emit_quiver_svg(traj.states.back()));
        RunSummary summary;
        finish(summary);
        art.trajectory = std::move(traj);
    } catch (const SolverFailure& e) {
        rec.trace.close();
        if (rec.last) {
            rec.snapshot(*rec.last);
        }
        RunSummary summary;
        summary.ok = false;
        summary.failed_step = e.step();
        summary.message = e.what();
        finish(summary);
        write_text(art.directory / "FAILED", std::string(e.what()) + "\n");
        throw;
    }
    return art;
}

Comparison compare_runs(const std::vector<TraceRow>& a, const std::vector<TraceRow>& b, double threshold)
{
    if (a.size() != b.size()) {
        throw ConfigError("compare: step counts differ (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + " rows)");
    }
    if (a.empty()) {
        throw ConfigError("compare: empty traces");
    }
    Comparison cmp;
    cmp.threshold = threshold;
    cmp.ratios.reserve(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        if (a[n].step != b[n].step) {
            throw ConfigError("compare: step indices differ at row " + std::to_string(n));
        }
        cmp.ratios.push_back(a[n].E / b[n].E);
    }
    cmp.ratio_final = cmp.ratios.back();
    cmp.pass = cmp.ratio_final <= threshold;
    return cmp;
}

Comparison compare_runs(const RunArtifacts& a, const RunArtifacts& b, double threshold)
{
    return compare_runs(read_trace(a.trace), read_trace(b.trace), threshold);
}

void write_comparison(const fs::path& path, const Comparison& cmp)
{
    std::ostringstream os;
    os << "step,ratio\n";
    for (std::size_t n = 0; n < cmp.ratios.size(); ++n) {
        os << n << ',' << format_real(cmp.ratios[n]) << '\n';
    }
    write_text(path, os.str());
}

namespace {

CheckResult check_identities(const ExperimentConfig& cfg, const CheckOptions& opt, const fs::path& dir)
{
    const Grid grid = make_grid(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
    const EquilibriumProfile profile = make_profile(cfg.R, cfg.a, cfg.b, cfg.Ly);
    IdentityOptions iopt;
    iopt.c = cfg.c;

    IdentityReport report;
    if (opt.source == "manufactured") {
        const ActuationShape shape = smooth_test_shape(cfg.Lx);
        report = check_energy_identities(manufactured_deviation(grid, opt.psi), opt.psi, shape, profile, iopt);
    } else if (opt.source == "ic") {
        const DeviationState dev = deviation(initial_state(cfg, grid, profile), profile);
        report = check_energy_identities(dev, 0.0, configured_shape(cfg), profile, iopt);
    } else {
        throw ConfigError("check identities: unknown source '" + opt.source + "'");
    }

    CheckResult res;
    res.report = dir / "identities.csv";
    write_identity_report(res.report, report);
    res.passed = true;
    for (const IdentityEntry& e : report.entries) {
        if (e.residual > opt.tol * std::max(1.0, e.scale)) {
            res.passed = false;
            std::ostringstream os;
            os << e.name << ": residual " << format_real(e.residual) << " exceeds " << opt.tol
               << " * max(1, scale " << format_real(e.scale) << ")";
            res.first_failure = os.str();
            break;
        }
    }
    return res;
}

CheckResult check_decay(const ExperimentConfig& cfg, const CheckOptions& opt, const fs::path& dir)
{
    std::vector<EnergySample> energies;
    if (!opt.trace.empty()) {
        for (const TraceRow& r : read_trace(opt.trace)) {
            energies.push_back({r.t, r.E});
        }
    } else {
        ExperimentConfig run_cfg = cfg;
        run_cfg.output_directory = (dir / "run").string();
        const RunArtifacts art = run_experiment(run_cfg);
        for (const TraceRow& r : read_trace(art.trace)) {
            energies.push_back({r.t, r.E});
        }
    }
    const DecayReport report = decay_bound_check(energies, cfg.alpha, opt.tol);

    CheckResult res;
    res.report = dir / "decay.csv";
    write_decay_report(res.report, report);
    res.passed = report.violations == 0;
    for (const DecayEntry& e : report.entries) {
        if (e.violation) {
            std::ostringstream os;
            os << "step " << e.step << ": E = " << format_real(e.E) << " above bound " << format_real(e.bound)
               << " (ratio " << format_real(e.ratio) << ")";
            res.first_failure = os.str();
            break;
        }
    }
    return res;
}

CheckResult check_shape(const ExperimentConfig& cfg, const fs::path& dir)
{
    const Grid grid = make_grid(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
    const MomentReport report = validate_shape(configured_shape(cfg), grid);
    CheckResult res;
    res.report = dir / "shape.csv";
    write_moment_report(res.report, report);
    res.passed = report.accepted;
    res.first_failure = report.violation;
    return res;
}

} // namespace

CheckResult check_command(const ExperimentConfig& cfg, CheckKind which, const CheckOptions& options)
{
    const fs::path dir = options.out.empty() ? fs::path(cfg.output_directory) : options.out;
    fs::create_directories(dir);
    switch (which) {
    case CheckKind::identities:
        return check_identities(cfg, options, dir);
    case CheckKind::decay:
        return check_decay(cfg, options, dir);
    case CheckKind::shape:
        return check_shape(cfg, dir);
    }
    throw ConfigError("unknown check");
}

std::vector<SweepPoint> expand_sweep(const std::vector<SweepAxis>& axes)
{
    std::vector<SweepPoint> points{SweepPoint{}};
    for (const SweepAxis& axis : axes) {
        if (axis.values.empty()) {
            throw ConfigError(axis.key + ": sweep axis has no values");
        }
        std::vector<SweepPoint> next;
        for (const SweepPoint& p : points) {
            for (const std::string& v : axis.values) {
                SweepPoint q = p;
                q.overrides.emplace_back(axis.key, v);
                std::string part = axis.key + "=" + v;
                std::replace_if(part.begin(), part.end(), [](char ch) { return ch == '/' || ch == ' '; }, '_');
                q.name += (q.name.empty() ? "" : "__") + part;
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

std::vector<SweepOutcome> run_sweep(const std::string& base_text, const std::string& base_dir,
                                    const ConfigOverrides& base_overrides, const std::vector<SweepAxis>& axes,
                                    const fs::path& out, int jobs)
{
    const std::vector<SweepPoint> points = expand_sweep(axes);
    // Every point is parsed before any run starts.
    std::vector<ExperimentConfig> configs;
    for (const SweepPoint& p : points) {
        ConfigOverrides ov = base_overrides;
        ov.insert(ov.end(), p.overrides.begin(), p.overrides.end());
        ExperimentConfig cfg = parse_config(base_text, ov, base_dir);
        cfg.output_directory = (out / (p.name.empty() ? "base" : p.name)).string();
        configs.push_back(std::move(cfg));
    }

    std::vector<SweepOutcome> outcomes(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            SweepOutcome& o = outcomes[i];
            o.point = points[i];
            try {
                o.summary = run_experiment(configs[i]).summary;
            } catch (const SolverFailure& e) {
                o.status = 2;
                o.message = e.what();
                o.summary.ok = false;
                o.summary.failed_step = e.step();
            } catch (const IllConditionedError& e) {
                o.status = 2;
                o.message = e.what();
            } catch (const ConfigError& e) {
                o.status = 1;
                o.message = e.what();
            } catch (const DegenerateShapeError& e) {
                o.status = 1;
                o.message = e.what();
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; ++t) {
        threads.emplace_back(worker);
    }
    for (std::thread& t : threads) {
        t.join();
    }

    std::ostringstream os;
    os << "point,status,E_initial,E_final,fitted_rate,violations,failed_step\n";
    for (const SweepOutcome& o : outcomes) {
        os << o.point.name << ',' << o.status << ',' << format_real(o.summary.E_initial) << ','
           << format_real(o.summary.E_final) << ',' << format_real(o.summary.fitted_rate) << ','
           << o.summary.violations << ',' << o.summary.failed_step << '\n';
    }
    fs::create_directories(out);
    write_text(out / "sweep_summary.csv", os.str());
    return outcomes;
}

} // namespace chanflow
