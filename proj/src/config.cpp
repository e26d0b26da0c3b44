#include "chanflow/config.hpp"

#include "chanflow/csv.hpp"
#include "chanflow/error.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <variant>

namespace chanflow {

namespace fs = std::filesystem;

namespace {

using Field = std::variant<double ExperimentConfig::*, int ExperimentConfig::*, std::string ExperimentConfig::*>;

struct KeySpec {
    const char* key;
    Field field;
};

const std::vector<KeySpec>& key_table()
{
    static const std::vector<KeySpec> table = {
        {"geometry.Lx", &ExperimentConfig::Lx},
        {"geometry.Ly", &ExperimentConfig::Ly},
        {"geometry.nx", &ExperimentConfig::nx},
        {"geometry.ny", &ExperimentConfig::ny},
        {"physics.R", &ExperimentConfig::R},
        {"physics.a", &ExperimentConfig::a},
        {"physics.b", &ExperimentConfig::b},
        {"solver.c", &ExperimentConfig::c},
        {"solver.dt", &ExperimentConfig::dt},
        {"solver.steps", &ExperimentConfig::steps},
        {"solver.solve_strategy", &ExperimentConfig::solve_strategy},
        {"solver.oversampling", &ExperimentConfig::oversampling},
        {"solver.gauge_node", &ExperimentConfig::gauge_node},
        {"control.mode", &ExperimentConfig::mode},
        {"control.alpha", &ExperimentConfig::alpha},
        {"control.psi_max", &ExperimentConfig::psi_max},
        {"control.delay_steps", &ExperimentConfig::delay_steps},
        {"control.psi_sign", &ExperimentConfig::psi_sign},
        {"shape.kind", &ExperimentConfig::shape_kind},
        {"shape.theta", &ExperimentConfig::theta},
        {"shape.epsilon", &ExperimentConfig::epsilon},
        {"shape.file", &ExperimentConfig::shape_file},
        {"wave.A", &ExperimentConfig::wave_A},
        {"wave.omega", &ExperimentConfig::wave_omega},
        {"wave.c", &ExperimentConfig::wave_c},
        {"ic.preset", &ExperimentConfig::ic_preset},
        {"ic.file", &ExperimentConfig::ic_file},
        {"output.directory", &ExperimentConfig::output_directory},
        {"output.snapshot_every", &ExperimentConfig::snapshot_every},
    };
    return table;
}

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s)
{
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

double to_real(const std::string& key, const std::string& text)
{
    if (text == "inf" || text == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    auto parse = [&](const std::string& s, double& out) {
        const char* b = s.data();
        const char* e = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(b, e, out);
        return ec == std::errc() && ptr == e;
    };
    double v = 0.0;
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        double num = 0.0, den = 0.0;
        if (parse(trim(text.substr(0, slash)), num) && parse(trim(text.substr(slash + 1)), den) && den != 0.0) {
            return num / den;
        }
    } else if (parse(text, v)) {
        return v;
    }
    throw ConfigError(key + ": expected a real number, got '" + text + "'");
}

int to_int(const std::string& key, const std::string& text)
{
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError(key + ": expected an integer, got '" + text + "'");
    }
    return v;
}

const KeySpec& find_key(const std::string& key)
{
    for (const auto& spec : key_table()) {
        if (key == spec.key) {
            return spec;
        }
    }
    throw ConfigError("unknown key '" + key + "'");
}

void assign(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    const KeySpec& spec = find_key(key);
    std::visit(
        [&](auto member) {
            using T = std::remove_reference_t<decltype(cfg.*member)>;
            if constexpr (std::is_same_v<T, double>) {
                cfg.*member = to_real(key, value);
            } else if constexpr (std::is_same_v<T, int>) {
                cfg.*member = to_int(key, value);
            } else {
                cfg.*member = value;
            }
        },
        spec.field);
}

void require(bool cond, const std::string& key, const std::string& msg)
{
    if (!cond) {
        throw ConfigError(key + ": " + msg);
    }
}

void validate(const ExperimentConfig& cfg)
{
    require(cfg.nx >= 3, "geometry.nx", "must be >= 3");
    require(cfg.ny >= 3, "geometry.ny", "must be >= 3");
    require(cfg.Lx > 0.0 && std::isfinite(cfg.Lx), "geometry.Lx", "must be > 0");
    require(cfg.Ly > 0.0 && std::isfinite(cfg.Ly), "geometry.Ly", "must be > 0");
    require(cfg.R > 0.0 && std::isfinite(cfg.R), "physics.R", "must be > 0");
    require(cfg.a >= 0.0 && std::isfinite(cfg.a), "physics.a", "must be >= 0");
    require(cfg.b >= 0.0 && std::isfinite(cfg.b), "physics.b", "must be >= 0");
    require(cfg.c > 0.0 && std::isfinite(cfg.c), "solver.c", "must be > 0");
    require(cfg.dt > 0.0, "solver.dt", "must be > 0");
    require(cfg.steps >= 1, "solver.steps", "must be >= 1");
    require(cfg.solve_strategy == "least-squares" || cfg.solve_strategy == "direct-square",
            "solver.solve_strategy", "must be least-squares or direct-square");
    require(cfg.oversampling >= 1, "solver.oversampling", "must be >= 1");
    require(cfg.gauge_node >= 0 && cfg.gauge_node < cfg.nx * cfg.ny, "solver.gauge_node", "out of range");
    require(cfg.mode == "open" || cfg.mode == "closed" || cfg.mode == "wave", "control.mode",
            "must be open, closed or wave");
    require(cfg.alpha > 0.0 && std::isfinite(cfg.alpha), "control.alpha", "alpha must be > 0");
    require(cfg.psi_max > 0.0, "control.psi_max", "must be > 0");
    require(cfg.delay_steps >= 1, "control.delay_steps", "must be >= 1");
    require(cfg.psi_sign == "energy-consistent" || cfg.psi_sign == "published", "control.psi_sign",
            "must be energy-consistent or published");
    require(cfg.shape_kind == "step" || cfg.shape_kind == "tabulated" || cfg.shape_kind == "wave", "shape.kind",
            "must be step, tabulated or wave");
    require(cfg.ic_preset == "paper" || cfg.ic_preset == "equilibrium" || cfg.ic_preset == "file", "ic.preset",
            "must be paper, equilibrium or file");
    require(cfg.snapshot_every >= 0, "output.snapshot_every", "must be >= 0");
    require(!cfg.output_directory.empty(), "output.directory", "must not be empty");

    if (cfg.shape_kind == "step") {
        try {
            make_step_shape(cfg.theta, cfg.epsilon, cfg.Lx);
        } catch (const DegenerateShapeError& e) {
            throw ConfigError(std::string("shape.epsilon: ") + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("shape.epsilon: ") + e.what());
        }
    } else if (cfg.shape_kind == "tabulated") {
        require(!cfg.shape_file.empty(), "shape.file", "required for tabulated shapes");
        require(fs::exists(cfg.shape_file), "shape.file", "file not found: " + cfg.shape_file);
        const ActuationShape shape = read_shape_csv(cfg.shape_file);
        require(std::abs(shape.Lx() - cfg.Lx) <= 1e-12 * cfg.Lx, "shape.file", "last x must equal geometry.Lx");
        const MomentReport rep = validate_shape(shape, make_grid(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly));
        require(rep.accepted, "shape.file", "shape rejected (" + rep.violation + ")");
    } else {
        require(cfg.mode == "wave", "shape.kind", "wave shape is only valid with control.mode = wave");
    }

    if (cfg.mode == "wave") {
        require(std::isfinite(cfg.wave_A) && std::isfinite(cfg.wave_c), "wave.A", "wave parameters must be finite");
        require(cfg.wave_omega != 0.0 && std::isfinite(cfg.wave_omega), "wave.omega", "must be nonzero");
        const double k = cfg.wave_omega * cfg.Lx / (2.0 * std::numbers::pi);
        require(std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, std::abs(k)), "wave.omega",
                "must equal 2*pi*k/Lx for an integer k, otherwise the wall flux has nonzero mean");
    }

    if (cfg.ic_preset == "file") {
        require(!cfg.ic_file.empty(), "ic.file", "required when ic.preset = file");
        require(fs::exists(cfg.ic_file), "ic.file", "file not found: " + cfg.ic_file);
    }
}

std::string quote_if_needed(const std::string& s)
{
    if (s.empty() || s.find_first_of(" \t#=\"") != std::string::npos) {
        return "\"" + s + "\"";
    }
    return s;
}

} // namespace

std::pair<std::string, std::string> split_assignment(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("expected key=value, got '" + text + "'");
    }
    return {trim(text.substr(0, eq)), unquote(trim(text.substr(eq + 1)))};
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& spec : key_table()) {
            k.emplace_back(spec.key);
        }
        return k;
    }();
    return keys;
}

ExperimentConfig parse_config(const std::string& text, const ConfigOverrides& overrides, const std::string& base_dir)
{
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body;
        bool quoted = false;
        for (char ch : line) {
            if (ch == '"') {
                quoted = !quoted;
            }
            if (ch == '#' && !quoted) {
                break;
            }
            body.push_back(ch);
        }
        body = trim(body);
        if (body.empty()) {
            continue;
        }
        if (body.find('=') == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        entries.push_back(split_assignment(body));
    }
    entries.insert(entries.end(), overrides.begin(), overrides.end());

    ExperimentConfig cfg;
    bool a_given = false;
    bool omega_given = false;
    bool preset_given = false;
    for (const auto& [key, value] : entries) {
        assign(cfg, key, value);
        a_given = a_given || key == "physics.a";
        omega_given = omega_given || key == "wave.omega";
        preset_given = preset_given || key == "ic.preset";
    }
    if (!a_given) {
        cfg.a = 4.0 / cfg.R;
    }
    if (!omega_given) {
        cfg.wave_omega = 2.0 * std::numbers::pi / cfg.Lx;
    }
    if (!cfg.ic_file.empty() && !preset_given) {
        cfg.ic_preset = "file";
    }
    if (!base_dir.empty()) {
        for (std::string* p : {&cfg.shape_file, &cfg.ic_file}) {
            if (!p->empty() && fs::path(*p).is_relative()) {
                *p = (fs::path(base_dir) / *p).lexically_normal().string();
            }
        }
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const ConfigOverrides& overrides)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides, fs::path(path).parent_path().string());
}

std::string serialize_config(const ExperimentConfig& cfg)
{
    std::ostringstream os;
    for (const auto& spec : key_table()) {
        os << spec.key << " = ";
        std::visit(
            [&](auto member) {
                using T = std::remove_cv_t<std::remove_reference_t<decltype(cfg.*member)>>;
                if constexpr (std::is_same_v<T, double>) {
                    os << format_real(cfg.*member);
                } else if constexpr (std::is_same_v<T, int>) {
                    os << cfg.*member;
                } else {
                    os << quote_if_needed(cfg.*member);
                }
            },
            spec.field);
        os << '\n';
    }
    return os.str();
}

} // namespace chanflow
