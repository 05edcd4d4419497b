#include "hcw/run_config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "hcw/errors.hpp"

namespace hcw {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) { return fmt::format("{:016x}", h); }

double ProfileSpec::evaluate(double s) const {
    if (support && (s < support->first || s > support->second)) return 0.0;
    if (family == "zero") return 0.0;
    if (family == "constant") return value;
    if (family == "sine") return amplitude * std::pow(std::sin(frequency * std::numbers::pi * s + phase), power);
    if (family == "gaussian") return amplitude * std::exp(-(s - center) * (s - center) / (2.0 * width * width));
    if (family == "polynomial") {
        double acc = 0.0;
        for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * s + *it;
        return acc;
    }
    throw ConfigError(fmt::format("profile family '{}' cannot be evaluated pointwise", family));
}

namespace {

std::ifstream open_csv(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw ConfigError(fmt::format("cannot open CSV file {}", p.string()));
    return is;
}

void mask_support(const ProfileSpec& p, double s, double& v) {
    if (p.support && (s < p.support->first || s > p.support->second)) v = 0.0;
}

}  // namespace

SpatialProfile sample_spatial(const ProfileSpec& p, int ny, double time, const DomainSpec& domain) {
    SpatialProfile out(ny, time, domain);
    if (p.family == "csv") {
        std::ifstream is = open_csv(p.csv_path);
        out = read_profile_csv(is, ny, time, domain);
        for (int j = 0; j <= ny; ++j) mask_support(p, out.x(j), out[j]);
        return out;
    }
    for (int j = 0; j <= ny; ++j) out[j] = p.evaluate(out.x(j));
    return out;
}

Trace sample_trace(const ProfileSpec& p, const Grid& grid) {
    if (p.family == "csv") {
        std::ifstream is = open_csv(p.csv_path);
        Trace tr = read_trace_csv(is, grid);
        for (int n = 0; n <= grid.nt(); ++n) mask_support(p, grid.t(n), tr[n]);
        return tr;
    }
    Trace tr(grid);
    for (int n = 0; n <= grid.nt(); ++n) tr[n] = p.evaluate(grid.t(n));
    return tr;
}

namespace {

void allow_keys(const json& j, const char* where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be a JSON object", where));
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) throw ConfigError(fmt::format("unknown key '{}' in '{}'", k, where));
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const char* where) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("'{}.{}' has the wrong type", where, key));
    }
}

std::vector<double> number_list(const json& j, const char* key, const char* where) {
    if (!j.contains(key)) return {};
    if (!j[key].is_array()) throw ConfigError(fmt::format("'{}.{}' must be an array of numbers", where, key));
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw ConfigError(fmt::format("'{}.{}' must contain numbers only", where, key));
        out.push_back(v.get<double>());
    }
    return out;
}

ProfileSpec parse_profile(const json& j, const char* where, const fs::path& base) {
    allow_keys(j, where,
               {"family", "amplitude", "frequency", "phase", "power", "center", "width", "value", "coefficients",
                "path", "support"});
    ProfileSpec p;
    p.family = get_or<std::string>(j, "family", "", where);
    static const std::set<std::string> families{"sine", "gaussian", "polynomial", "constant", "zero", "csv"};
    if (!families.count(p.family)) {
        throw ConfigError(fmt::format(
            "'{}': unknown profile family '{}' (expected sine, gaussian, polynomial, constant, zero or csv)", where,
            p.family));
    }
    p.amplitude = get_or(j, "amplitude", p.amplitude, where);
    p.frequency = get_or(j, "frequency", p.frequency, where);
    p.phase = get_or(j, "phase", p.phase, where);
    p.power = get_or(j, "power", p.power, where);
    p.center = get_or(j, "center", p.center, where);
    p.width = get_or(j, "width", p.width, where);
    p.value = get_or(j, "value", p.value, where);
    p.coefficients = number_list(j, "coefficients", where);
    if (p.power < 1) throw ConfigError(fmt::format("'{}': power must be a positive integer", where));
    if (p.family == "gaussian" && !(p.width > 0.0)) throw ConfigError(fmt::format("'{}': width must be positive", where));
    if (p.family == "polynomial" && p.coefficients.empty()) {
        throw ConfigError(fmt::format("'{}': polynomial needs coefficients", where));
    }
    if (p.family == "csv") {
        const auto path = get_or<std::string>(j, "path", "", where);
        if (path.empty()) throw ConfigError(fmt::format("'{}': csv profile needs a path", where));
        p.csv_path = fs::path(path).is_absolute() ? fs::path(path) : base / path;
    }
    if (j.contains("support")) {
        const auto s = number_list(j, "support", where);
        if (s.size() != 2 || !(s[0] <= s[1])) throw ConfigError(fmt::format("'{}': support must be [a, b] with a <= b", where));
        p.support = std::make_pair(s[0], s[1]);
    }
    return p;
}

std::optional<ProfileSpec> optional_profile(const json& j, const char* key, const char* where, const fs::path& base) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return parse_profile(j[key], fmt::format("{}.{}", where, key).c_str(), base);
}

void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("{} must be positive, got {}", what, v));
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    allow_keys(doc, "config",
               {"domain", "grid", "follower", "partition", "delta", "control", "initial", "targets", "optimizer",
                "sweep", "threshold", "output", "seed"});
    RunConfig rc;
    rc.canonical = doc.dump();
    rc.hash = fnv1a64(rc.canonical);

    const json empty = json::object();
    const json& dom = doc.contains("domain") ? doc["domain"] : empty;
    allow_keys(dom, "domain", {"k", "T", "allow_k_zero"});
    rc.domain.k = get_or(dom, "k", rc.domain.k, "domain");
    rc.domain.T = get_or(dom, "T", rc.domain.T, "domain");
    rc.domain.allow_k_zero = get_or(dom, "allow_k_zero", false, "domain");
    try {
        rc.domain.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }

    const json& grid = doc.contains("grid") ? doc["grid"] : empty;
    allow_keys(grid, "grid", {"ny", "nt", "cfl_safety"});
    rc.ny = get_or(grid, "ny", rc.ny, "grid");
    if (grid.contains("nt") && !grid["nt"].is_null()) rc.nt = get_or(grid, "nt", 0, "grid");
    rc.cfl_safety = get_or(grid, "cfl_safety", rc.cfl_safety, "grid");

    const json& fol = doc.contains("follower") ? doc["follower"] : empty;
    allow_keys(fol, "follower",
               {"sigma", "u_tilde2", "method", "max_iters", "tol", "relaxation", "relaxation_floor",
                "monolithic_fallback"});
    rc.sigma = get_or(fol, "sigma", rc.sigma, "follower");
    check_positive(rc.sigma, "follower.sigma");
    if (fol.contains("u_tilde2") && !fol["u_tilde2"].is_null()) {
        allow_keys(fol["u_tilde2"], "follower.u_tilde2", {"space", "time"});
        rc.u_tilde2_space = optional_profile(fol["u_tilde2"], "space", "follower.u_tilde2", base_dir);
        rc.u_tilde2_time = optional_profile(fol["u_tilde2"], "time", "follower.u_tilde2", base_dir);
    }
    rc.solver.method = follower_method_from_string(get_or<std::string>(fol, "method", "krylov", "follower"));
    rc.solver.max_iters = get_or(fol, "max_iters", rc.solver.max_iters, "follower");
    rc.solver.tol = get_or(fol, "tol", rc.solver.tol, "follower");
    rc.solver.relaxation = get_or(fol, "relaxation", rc.solver.relaxation, "follower");
    rc.solver.relaxation_floor =
        get_or(fol, "relaxation_floor", std::min(rc.solver.relaxation_floor, rc.solver.relaxation), "follower");
    rc.solver.monolithic_fallback = get_or(fol, "monolithic_fallback", rc.solver.monolithic_fallback, "follower");

    const json& part = doc.contains("partition") ? doc["partition"] : empty;
    allow_keys(part, "partition", {"mode", "t_split"});
    try {
        rc.partition_mode = partition_mode_from_string(get_or<std::string>(part, "mode", "overlap", "partition"));
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    rc.t_split = get_or(part, "t_split", 0.5 * rc.domain.T, "partition");
    if (rc.partition_mode == PartitionMode::time_split && !(rc.t_split > 0.0 && rc.t_split < rc.domain.T)) {
        throw ConfigError("partition.t_split must lie strictly inside (0, T)");
    }

    rc.delta = get_or(doc, "delta", 0.0, "config");
    if (!(rc.delta >= 0.0)) throw ConfigError("delta must be nonnegative");

    rc.control = optional_profile(doc, "control", "config", base_dir);
    if (doc.contains("initial")) {
        allow_keys(doc["initial"], "initial", {"value", "velocity"});
        rc.initial_value = optional_profile(doc["initial"], "value", "initial", base_dir);
        rc.initial_velocity = optional_profile(doc["initial"], "velocity", "initial", base_dir);
    }

    if (doc.contains("targets") && !doc["targets"].is_null()) {
        const json& t = doc["targets"];
        allow_keys(t, "targets", {"mode", "u0", "u1", "rho0", "rho1", "reference_control", "radius_fraction"});
        TargetConfig tc;
        const auto mode = get_or<std::string>(t, "mode", "explicit", "targets");
        if (mode == "explicit") {
            tc.mode = TargetMode::explicit_balls;
        } else if (mode == "free_state") {
            tc.mode = TargetMode::free_state;
        } else if (mode == "manufactured") {
            tc.mode = TargetMode::manufactured;
        } else {
            throw ConfigError(fmt::format("unknown target mode '{}' (expected explicit, free_state or manufactured)", mode));
        }
        tc.u0 = optional_profile(t, "u0", "targets", base_dir);
        tc.u1 = optional_profile(t, "u1", "targets", base_dir);
        tc.rho0 = get_or(t, "rho0", 0.0, "targets");
        tc.rho1 = get_or(t, "rho1", 0.0, "targets");
        tc.reference_control = optional_profile(t, "reference_control", "targets", base_dir);
        tc.radius_fraction = get_or(t, "radius_fraction", tc.radius_fraction, "targets");
        if (tc.mode == TargetMode::manufactured) {
            if (!tc.reference_control) throw ConfigError("manufactured targets need a reference_control profile");
            check_positive(tc.radius_fraction, "targets.radius_fraction");
        } else {
            check_positive(tc.rho0, "targets.rho0");
            check_positive(tc.rho1, "targets.rho1");
            if (tc.mode == TargetMode::explicit_balls && (!tc.u0 || !tc.u1)) {
                throw ConfigError("explicit targets need both u0 and u1 profiles");
            }
        }
        rc.targets = tc;
    }

    const json& opt = doc.contains("optimizer") ? doc["optimizer"] : empty;
    allow_keys(opt, "optimizer",
               {"max_iters", "tol_vi", "stationarity_tol", "newton_polish", "vi_samples", "delta_rounds", "delta_tol"});
    rc.optimizer.max_iters = get_or(opt, "max_iters", rc.optimizer.max_iters, "optimizer");
    rc.optimizer.tol_vi = get_or(opt, "tol_vi", rc.optimizer.tol_vi, "optimizer");
    rc.optimizer.stationarity_tol = get_or(opt, "stationarity_tol", rc.optimizer.stationarity_tol, "optimizer");
    rc.optimizer.newton_polish = get_or(opt, "newton_polish", rc.optimizer.newton_polish, "optimizer");
    rc.optimizer.vi_samples = get_or(opt, "vi_samples", rc.optimizer.vi_samples, "optimizer");
    rc.optimizer.delta_rounds = get_or(opt, "delta_rounds", rc.optimizer.delta_rounds, "optimizer");
    rc.optimizer.delta_tol = get_or(opt, "delta_tol", rc.optimizer.delta_tol, "optimizer");
    if (rc.optimizer.max_iters < 1 || rc.optimizer.vi_samples < 1) {
        throw ConfigError("optimizer.max_iters and optimizer.vi_samples must be positive");
    }

    if (doc.contains("sweep")) {
        const json& sw = doc["sweep"];
        allow_keys(sw, "sweep", {"k", "T", "sigma", "radius"});
        rc.sweep = {number_list(sw, "k", "sweep"), number_list(sw, "T", "sweep"), number_list(sw, "sigma", "sweep"),
                    number_list(sw, "radius", "sweep")};
    }
    if (doc.contains("threshold")) {
        allow_keys(doc["threshold"], "threshold", {"k"});
        rc.threshold_k = number_list(doc["threshold"], "k", "threshold");
    }
    if (doc.contains("output")) {
        allow_keys(doc["output"], "output", {"dir"});
        rc.output_dir = get_or<std::string>(doc["output"], "dir", rc.output_dir, "output");
    }
    rc.seed = get_or<std::uint64_t>(doc, "seed", rc.seed, "config");
    rc.optimizer.seed = rc.seed;
    return rc;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str(), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

Grid RunConfig::make_grid() const {
    if (nt) return Grid(domain, ny, *nt, cfl_safety);
    return Grid::with_cfl(domain, ny, cfl_safety);
}

FollowerConfig RunConfig::make_follower(const Grid& grid) const {
    FollowerConfig cfg(grid);
    cfg.sigma = sigma;
    cfg.solver = solver;
    cfg.partition = partition_mode == PartitionMode::overlap
                        ? SigmaPartition::overlap(grid.nt())
                        : SigmaPartition::time_split(grid.nt(), grid.dt(), t_split);
    if (u_tilde2_space || u_tilde2_time) {
        Field u(grid);
        std::optional<Trace> time_part;
        if (u_tilde2_time) time_part = sample_trace(*u_tilde2_time, grid);
        for (int n = 0; n <= grid.nt(); ++n) {
            const double tf = time_part ? (*time_part)[n] : 1.0;
            if (u_tilde2_space) {
                const SpatialProfile s = sample_spatial(*u_tilde2_space, grid.ny(), grid.t(n), grid.domain());
                for (int j = 0; j <= grid.ny(); ++j) u(j, n) = s[j] * tf;
            } else {
                for (int j = 0; j <= grid.ny(); ++j) u(j, n) = tf;
            }
        }
        cfg.u_tilde2 = std::move(u);
    }
    cfg.validate();
    return cfg;
}

TargetSpec RunConfig::make_targets(const FollowerConfig& cfg) const {
    if (!targets) throw ConfigError("this command needs a 'targets' section");
    const Grid& g = cfg.grid;
    switch (targets->mode) {
        case TargetMode::explicit_balls: {
            TargetSpec t{sample_spatial(*targets->u0, g.ny(), g.T(), g.domain()),
                         sample_spatial(*targets->u1, g.ny(), g.T(), g.domain()), targets->rho0, targets->rho1};
            t.validate(g);
            return t;
        }
        case TargetMode::free_state:
            return free_state_targets(cfg, targets->rho0, targets->rho1);
        case TargetMode::manufactured:
            return manufactured_targets(leader_trace(cfg, sample_trace(*targets->reference_control, g)), cfg,
                                        targets->radius_fraction);
    }
    throw ConfigError("unreachable target mode");
}

}  // namespace hcw
