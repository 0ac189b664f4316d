#include "mpslam/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mpslam/angles.hpp"
#include "mpslam/errors.hpp"

namespace mpslam {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> numbers(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& p : split(v, ',')) out.push_back(to_double(key, p));
    return out;
}

std::vector<Point> points(const std::string& key, const std::string& v) {
    std::vector<Point> out;
    for (const auto& item : split(v, ';')) {
        const auto xy = numbers(key, item);
        if (xy.size() != 2) throw ConfigError(key + ": expected 'x,y' entries separated by ';'");
        out.emplace_back(xy[0], xy[1]);
    }
    return out;
}

std::vector<Segment> segments(const std::string& key, const std::string& v, bool reflective) {
    std::vector<Segment> out;
    for (const auto& item : split(v, ';')) {
        const auto c = numbers(key, item);
        if (c.size() != 4) throw ConfigError(key + ": expected 'x1,y1,x2,y2' entries separated by ';'");
        out.push_back({Point(c[0], c[1]), Point(c[2], c[3]), reflective});
    }
    return out;
}

std::string join_points(const std::vector<Point>& pts) {
    std::ostringstream os;
    os.precision(10);
    for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? ";" : "") << pts[i].x() << "," << pts[i].y();
    return os.str();
}

std::string join_segments(const std::vector<Segment>& segs) {
    std::ostringstream os;
    os.precision(10);
    for (std::size_t i = 0; i < segs.size(); ++i)
        os << (i ? ";" : "") << segs[i].a.x() << "," << segs[i].a.y() << "," << segs[i].b.x() << "," << segs[i].b.y();
    return os.str();
}

std::string list_keys() {
    std::string s;
    for (const auto& [k, v] : config_defaults()) s += "\n  " + k;
    return s;
}

}  // namespace

const std::map<std::string, std::string>& config_defaults() {
    static const std::map<std::string, std::string> defaults = {
        {"scenario.experiment", "1"},
        {"scenario.room_width", "6.5"},
        {"scenario.room_height", "7.5"},
        {"scenario.pa", "2.6,4.6"},
        {"scenario.walls", "room"},
        {"scenario.obstacles", "auto"},
        {"scenario.waypoints", "default"},
        {"scenario.n_steps", "100"},
        {"scenario.dt", "1"},
        {"scenario.speed", "0.15"},
        {"scenario.sigma_d", "0.1"},
        {"scenario.sigma_aoa_deg", "2"},
        {"scenario.sigma_aod_deg", "2"},
        {"scenario.p_d", "0.95"},
        {"scenario.mu_fa", "5"},
        {"scenario.clutter_range", "15"},
        {"scenario.fc_hz", "6e9"},
        {"scenario.bandwidth_hz", "5e8"},
        {"scenario.rolloff", "0.6"},
        {"scenario.array", "3x3"},
        {"scenario.tx_power_db", "40"},
        {"scenario.reflection_loss_db", "3"},
        {"scenario.gamma_db", "9"},
        {"filter.enabled", "true"},
        {"filter.p_s", "0.999"},
        {"filter.p_de", "0.5"},
        {"filter.p_pr", "1e-4"},
        {"filter.mu_n", "0.1"},
        {"filter.d_max", "15"},
        {"filter.n_samples", "10"},
        {"filter.n_da", "100000"},
        {"filter.tol_da", "1e-6"},
        {"filter.da_damping", "0"},
        {"filter.sigma_a2", "9e-4"},
        {"filter.sigma_kappa_deg", "5"},
        {"filter.init_sigma_p", "0.1"},
        {"filter.init_sigma_v", "0.01"},
        {"filter.init_sigma_kappa_deg", "10"},
        {"filter.sigma_reg", "0.01"},
        {"filter.va_drift_std", "0"},
        {"filter.ut_alpha", "1"},
        {"filter.ut_beta", "2"},
        {"filter.ut_kappa", "auto"},
        {"filter.fusion", "extrinsic"},
        {"baseline.particles", ""},
        {"baseline.runs", "0"},
        {"mc.runs", "1"},
        {"mc.base_seed", "1"},
        {"mc.threads", "1"},
        {"output.dir", "results"},
        {"output.formats", "csv,json"},
        {"output.per_run", "true"},
        {"output.trace", "false"},
    };
    return defaults;
}

ExperimentConfig make_config(const std::map<std::string, std::string>& overrides) {
    std::map<std::string, std::string> v = config_defaults();
    for (const auto& [key, value] : overrides) {
        if (!v.count(key)) throw ConfigError("unknown key '" + key + "'; valid keys are:" + list_keys());
        v[key] = value;
    }
    const auto num = [&](const std::string& k) { return to_double(k, v.at(k)); };
    const auto integer = [&](const std::string& k) { return to_int(k, v.at(k)); };

    ExperimentConfig c;
    ScenarioSpec& s = c.scenario;
    s.experiment = static_cast<int>(integer("scenario.experiment"));
    if (s.experiment != 1 && s.experiment != 2) throw ConfigError("scenario.experiment must be 1 or 2");
    s.room_width = num("scenario.room_width");
    s.room_height = num("scenario.room_height");
    s.pa_positions = points("scenario.pa", v["scenario.pa"]);
    if (v["scenario.walls"] != "room") {
        s.walls = segments("scenario.walls", v["scenario.walls"], true);
        s.walls_explicit = true;
    }
    if (v["scenario.obstacles"] == "auto") {
        if (s.experiment == 2) s.obstacles = {default_obstacle(s.room_width, s.room_height)};
    } else {
        s.obstacles = segments("scenario.obstacles", v["scenario.obstacles"], false);
    }
    if (v["scenario.waypoints"] != "default") s.waypoints = points("scenario.waypoints", v["scenario.waypoints"]);
    s.n_steps = static_cast<int>(integer("scenario.n_steps"));
    if (s.n_steps < 1) throw ConfigError("scenario.n_steps must be at least 1");
    s.dt = num("scenario.dt");
    s.speed = num("scenario.speed");
    s.noise.sigma_range = num("scenario.sigma_d");
    s.noise.sigma_aoa = deg2rad(num("scenario.sigma_aoa_deg"));
    s.noise.sigma_aod = deg2rad(num("scenario.sigma_aod_deg"));
    s.detection.p_detect = num("scenario.p_d");
    s.detection.p_survive = num("filter.p_s");
    s.clutter.mean_count = num("scenario.mu_fa");
    s.clutter.max_range = num("scenario.clutter_range");
    s.rf.carrier_hz = num("scenario.fc_hz");
    s.rf.bandwidth_hz = num("scenario.bandwidth_hz");
    s.rf.rolloff = num("scenario.rolloff");
    s.rf.array = v["scenario.array"];
    s.rf.tx_power_db = num("scenario.tx_power_db");
    s.rf.reflection_loss_db = num("scenario.reflection_loss_db");
    s.rf.threshold_db = num("scenario.gamma_db");

    FilterConfig& f = c.filter;
    f.detection = s.detection;
    f.noise = s.noise;
    f.clutter = s.clutter;
    f.p_declare = num("filter.p_de");
    f.p_prune = num("filter.p_pr");
    f.birth.mean_count = num("filter.mu_n");
    f.birth.radius = num("filter.d_max");
    f.importance_samples = static_cast<int>(integer("filter.n_samples"));
    f.da.max_iterations = static_cast<int>(integer("filter.n_da"));
    f.da.tolerance = num("filter.tol_da");
    f.da.damping = num("filter.da_damping");
    const double kappa_std = deg2rad(num("filter.sigma_kappa_deg"));
    f.motion = build_motion(s.dt, num("filter.sigma_a2"), kappa_std * kappa_std);
    f.sigma_reg = num("filter.sigma_reg");
    f.va_drift_std = num("filter.va_drift_std");
    f.ut.alpha = num("filter.ut_alpha");
    f.ut.beta = num("filter.ut_beta");
    if (v["filter.ut_kappa"] != "auto") f.ut.kappa = num("filter.ut_kappa");
    if (v["filter.fusion"] == "extrinsic") {
        f.fusion = FusionRule::kExtrinsic;
    } else if (v["filter.fusion"] == "product") {
        f.fusion = FusionRule::kProduct;
    } else {
        throw ConfigError("filter.fusion must be 'extrinsic' or 'product'");
    }
    f.pa_positions = s.pa_positions;
    c.filter_enabled = to_bool("filter.enabled", v["filter.enabled"]);
    c.prior.position = num("filter.init_sigma_p");
    c.prior.velocity = num("filter.init_sigma_v");
    c.prior.heading = deg2rad(num("filter.init_sigma_kappa_deg"));
    if (c.prior.position <= 0 || c.prior.velocity <= 0 || c.prior.heading <= 0)
        throw DomainError("initial prior standard deviations must be positive");

    for (const auto& p : split(v["baseline.particles"], ',')) {
        const long long n = to_int("baseline.particles", p);
        if (n < 1) throw ConfigError("baseline.particles entries must be at least 1");
        c.particles.push_back(static_cast<int>(n));
    }
    c.baseline_runs = static_cast<int>(integer("baseline.runs"));
    if (c.baseline_runs < 0) throw ConfigError("baseline.runs must be nonnegative");

    c.mc.runs = static_cast<int>(integer("mc.runs"));
    if (c.mc.runs < 1) throw ConfigError("mc.runs must be at least 1");
    c.mc.base_seed = static_cast<std::uint64_t>(integer("mc.base_seed"));
    c.mc.threads = static_cast<int>(integer("mc.threads"));
    if (c.mc.threads < 1) throw ConfigError("mc.threads must be at least 1");

    c.output.dir = v["output.dir"];
    if (c.output.dir.empty()) throw ConfigError("output.dir must not be empty");
    c.output.csv = c.output.json = false;
    for (const auto& fmt : split(v["output.formats"], ',')) {
        if (fmt == "csv") {
            c.output.csv = true;
        } else if (fmt == "json") {
            c.output.json = true;
        } else {
            throw ConfigError("output.formats: unknown format '" + fmt + "' (csv, json)");
        }
    }
    c.output.per_run = to_bool("output.per_run", v["output.per_run"]);
    c.output.trace = to_bool("output.trace", v["output.trace"]);

    // Range and geometry checks.
    f.validate();
    if (c.baseline_runs > c.mc.runs) throw ConfigError("baseline.runs must not exceed mc.runs");
    ScenarioSpec probe = s;
    build_scenario(probe);

    // Normalize list-valued entries so the resolved view shows what is used.
    v["scenario.walls"] = s.walls_explicit ? join_segments(s.walls) : "room";
    v["scenario.obstacles"] = join_segments(s.obstacles);
    v["scenario.pa"] = join_points(s.pa_positions);
    if (!s.waypoints.empty()) v["scenario.waypoints"] = join_points(s.waypoints);
    c.resolved = std::move(v);
    return c;
}

ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> overrides;
    std::istringstream is(text);
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!config_defaults().count(key))
            throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key +
                              "'; valid keys are:" + list_keys());
        if (overrides.count(key)) throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
        overrides[key] = value;
    }
    return make_config(overrides);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
    if (cfg.output.dir.is_absolute()) return cfg.output.dir;
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) return std::filesystem::path(root) / cfg.output.dir;
    return cfg.output.dir;
}

std::string format_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    for (const auto& [k, v] : cfg.resolved) os << k << " = " << v << "\n";
    return os.str();
}

ScenarioSpec scenario_for_run(const ExperimentConfig& cfg, int r) {
    ScenarioSpec s = cfg.scenario;
    s.seed = cfg.mc.base_seed + static_cast<std::uint64_t>(r);
    return s;
}

}  // namespace mpslam
