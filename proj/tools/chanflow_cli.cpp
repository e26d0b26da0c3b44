#include "chanflow/error.hpp"
#include "chanflow/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace chanflow;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kSolverFailure = 2;
constexpr int kCheckFailure = 3;

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("-c,--config", c.config, "experiment config file");
    cmd->add_option("--set", c.sets, "override one key, key=value (repeatable)");
    cmd->add_option("-o,--out", c.out, "output directory (overrides output.directory)");
}

ConfigOverrides overrides_of(const Common& c)
{
    ConfigOverrides ov;
    for (const std::string& s : c.sets) {
        ov.push_back(split_assignment(s));
    }
    if (!c.out.empty()) {
        ov.emplace_back("output.directory", c.out);
    }
    return ov;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig config_of(const Common& c)
{
    if (c.config.empty()) {
        return parse_config("", overrides_of(c));
    }
    return load_config(c.config, overrides_of(c));
}

void print_summary(const RunArtifacts& art)
{
    const RunSummary& s = art.summary;
    std::cout << "output      " << art.directory.string() << '\n'
              << "steps       " << s.steps_completed << '\n'
              << "E_initial   " << format_real(s.E_initial) << '\n'
              << "E_final     " << format_real(s.E_final) << '\n'
              << "fitted_rate " << format_real(s.fitted_rate) << '\n'
              << "violations  " << s.violations << '\n'
              << "residual    " << format_real(s.residual_max) << " (max)\n";
}

int cmd_run(const Common& c)
{
    const RunArtifacts art = run_experiment(config_of(c));
    print_summary(art);
    return kOk;
}

int cmd_compare(const std::string& a, const std::string& b, double threshold, const std::string& out)
{
    auto trace_of = [](const std::string& p) {
        const fs::path path(p);
        return fs::is_directory(path) ? path / "trace.csv" : path;
    };
    const Comparison cmp = compare_runs(read_trace(trace_of(a)), read_trace(trace_of(b)), threshold);
    if (!out.empty()) {
        write_comparison(out, cmp);
    }
    std::cout << "ratio_final " << format_real(cmp.ratio_final) << '\n'
              << "threshold   " << format_real(cmp.threshold) << '\n'
              << (cmp.pass ? "PASS" : "FAIL") << '\n';
    return cmp.pass ? kOk : kCheckFailure;
}

int cmd_check(const Common& c, const std::string& which, CheckOptions opt)
{
    CheckKind kind = CheckKind::shape;
    if (which == "identities") {
        kind = CheckKind::identities;
    } else if (which == "decay") {
        kind = CheckKind::decay;
    } else if (which != "shape") {
        throw ConfigError("check: unknown suite '" + which + "'");
    }
    const ExperimentConfig cfg = config_of(c);
    if (opt.out.empty()) {
        opt.out = cfg.output_directory;
    }
    const CheckResult res = check_command(cfg, kind, opt);
    std::cout << "report " << res.report.string() << '\n';
    if (!res.passed) {
        std::cout << "FAIL " << res.first_failure << '\n';
        return kCheckFailure;
    }
    std::cout << "PASS\n";
    return kOk;
}

int cmd_validate_shape(const Common& c, const std::string& file)
{
    const ExperimentConfig cfg = config_of(c);
    const Grid grid = make_grid(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
    ActuationShape shape;
    if (!file.empty()) {
        shape = read_shape_csv(file);
    } else if (cfg.shape_kind == "tabulated") {
        shape = read_shape_csv(cfg.shape_file);
    } else {
        shape = make_step_shape(cfg.theta, cfg.epsilon, cfg.Lx);
    }
    const MomentReport r = validate_shape(shape, grid);
    std::cout << "m1 " << format_real(r.m1_quadrature) << '\n' << "m3 " << format_real(r.m3_quadrature) << '\n';
    if (r.m3_analytic) {
        std::cout << "m3_analytic " << format_real(*r.m3_analytic) << '\n';
    }
    if (!c.out.empty()) {
        fs::create_directories(c.out);
        write_moment_report(fs::path(c.out) / "shape.csv", r);
    }
    if (!r.accepted) {
        std::cout << "REJECTED " << r.violation << '\n';
        return kCheckFailure;
    }
    std::cout << "ACCEPTED\n";
    return kOk;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& vary, int jobs)
{
    std::vector<SweepAxis> axes;
    for (const std::string& v : vary) {
        const auto [key, list] = split_assignment(v);
        SweepAxis axis{key, {}};
        std::stringstream ss(list);
        std::string item;
        while (std::getline(ss, item, ',')) {
            axis.values.push_back(item);
        }
        axes.push_back(std::move(axis));
    }
    const std::string text = c.config.empty() ? std::string() : read_file(c.config);
    const std::string base_dir = c.config.empty() ? std::string() : fs::path(c.config).parent_path().string();
    ConfigOverrides ov;
    for (const std::string& s : c.sets) {
        ov.push_back(split_assignment(s));
    }
    const fs::path out = c.out.empty() ? fs::path(parse_config(text, ov, base_dir).output_directory) : fs::path(c.out);
    if (jobs <= 0) {
        jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    const std::vector<SweepOutcome> outcomes = run_sweep(text, base_dir, ov, axes, out, jobs);
    int status = kOk;
    for (const SweepOutcome& o : outcomes) {
        std::cout << o.point.name << " status=" << o.status << " E_final=" << format_real(o.summary.E_final);
        if (!o.message.empty()) {
            std::cout << " (" << o.message << ')';
        }
        std::cout << '\n';
        status = std::max(status, o.status);
    }
    return status;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"chanflow: boundary-controlled channel flow experiments"};
    app.require_subcommand(1);

    Common run_c;
    CLI::App* run = app.add_subcommand("run", "run one experiment");
    add_common(run, run_c);

    std::string cmp_a;
    std::string cmp_b;
    std::string cmp_out;
    double threshold = 0.2;
    CLI::App* compare = app.add_subcommand("compare", "final energy ratio of run A over run B");
    compare->add_option("a", cmp_a, "trace.csv or run directory (numerator)")->required();
    compare->add_option("b", cmp_b, "trace.csv or run directory (denominator)")->required();
    compare->add_option("--threshold", threshold, "pass if the final ratio is at most this");
    compare->add_option("-o,--out", cmp_out, "write the per-step ratio CSV here");

    Common check_c;
    std::string which;
    CheckOptions check_opt;
    CLI::App* check = app.add_subcommand("check", "run a diagnostic suite");
    add_common(check, check_c);
    check->add_option("suite", which, "identities | decay | shape")->required();
    check->add_option("--tol", check_opt.tol, "relative tolerance");
    check->add_option("--psi", check_opt.psi, "wall amplitude of the manufactured deviation");
    check->add_option("--source", check_opt.source, "identities source: manufactured | ic");
    check->add_option("--trace", check_opt.trace, "decay: read energies from this trace instead of running");

    Common shape_c;
    std::string shape_file;
    CLI::App* vshape = app.add_subcommand("validate-shape", "validate an actuation shape");
    add_common(vshape, shape_c);
    vshape->add_option("file", shape_file, "tabulated shape CSV (x,F); default is the configured shape");

    Common sweep_c;
    std::vector<std::string> vary;
    int jobs = 0;
    CLI::App* sweep = app.add_subcommand("sweep", "run the cartesian product of key values");
    add_common(sweep, sweep_c);
    sweep->add_option("--vary", vary, "key=v1,v2,... (repeatable)")->required();
    sweep->add_option("-j,--jobs", jobs, "worker threads (default: hardware concurrency)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) {
            return cmd_run(run_c);
        }
        if (*compare) {
            return cmd_compare(cmp_a, cmp_b, threshold, cmp_out);
        }
        if (*check) {
            return cmd_check(check_c, which, check_opt);
        }
        if (*vshape) {
            return cmd_validate_shape(shape_c, shape_file);
        }
        if (*sweep) {
            return cmd_sweep(sweep_c, vary, jobs);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DegenerateShapeError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure at step " << e.step() << ": " << e.what() << '\n';
        return kSolverFailure;
    } catch (const IllConditionedError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const ContractViolation& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
    return kOk;
}
