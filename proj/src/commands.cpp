#include "hcw/commands.hpp"

#include <atomic>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include <fmt/core.h>
#include <json.hpp>

#include "hcw/errors.hpp"
#include "hcw/leader_dual.hpp"

namespace hcw {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int run_guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConvergenceError& e) {
        err << "solver error: " << e.what() << '\n';
        if (!e.history().empty()) {
            err << "residual history:";
            for (double h : e.history()) err << ' ' << fmt::format("{:.3e}", h);
            err << '\n';
        }
        return kExitSolver;
    } catch (const InstabilityError& e) {
        err << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const Error& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitConfig;
    }
}

namespace {

struct RunHeader {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string grid;
    std::vector<std::string> warnings;

    ordered_json json() const {
        return {{"command", command}, {"config_hash", config_hash}, {"seed", seed}, {"grid", grid},
                {"warnings", warnings}};
    }
    CsvPreamble preamble() const {
        CsvPreamble p{"command=" + command, "config_hash=" + config_hash, fmt::format("seed={}", seed),
                      "grid=" + grid};
        for (const auto& w : warnings) p.push_back("warning=" + w);
        return p;
    }
};

std::string describe_grid(const Grid& g) {
    return fmt::format("k={} T={} ny={} nt={} dy={} dt={}", format_exact(g.k()), format_exact(g.T()), g.ny(), g.nt(),
                       format_exact(g.dy()), format_exact(g.dt()));
}

RunHeader make_header(const std::string& command, const RunConfig& rc, const Grid& g) {
    RunHeader h{command, hash_hex(rc.hash), rc.seed, describe_grid(g), check_admissible(g.domain()).warnings()};
    if (rc.partition_mode == PartitionMode::time_split) {
        h.warnings.push_back("time-split partition is experimental");
    }
    return h;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw ConfigError(fmt::format("cannot write {}", (dir / name).string()));
    return os;
}

void write_json(const fs::path& dir, const std::string& name, const ordered_json& j) {
    auto os = open_out(dir, name);
    os << j.dump(2) << '\n';
}

Trace leader_control(const RunConfig& rc, const FollowerConfig& cfg) {
    if (!rc.control) return Trace(cfg.grid);
    return leader_trace(cfg, sample_trace(*rc.control, cfg.grid));
}

}  // namespace

int cmd_simulate(const RunConfig& rc, const fs::path& out, std::ostream& log) {
    const Grid g = rc.make_grid();
    const RunHeader header = make_header("simulate", rc, g);
    WaveProblem prob;
    Trace bc = rc.control ? sample_trace(*rc.control, g) : Trace(g);
    prob.bc0 = bc;
    if (rc.initial_value) prob.data.value = sample_spatial(*rc.initial_value, g.ny(), 0.0, g.domain());
    if (rc.initial_velocity) prob.data.velocity = sample_spatial(*rc.initial_velocity, g.ny(), 0.0, g.domain());
    const Field u = solve_forward(g, prob);
    const Trace flux = trace_normal_derivative(u, Side::left);
    const FinalState fs = final_state(u);

    {
        auto os = open_out(out, "field.csv");
        write_field_csv(os, u, header.preamble());
    }
    {
        auto os = open_out(out, "control.csv");
        write_trace_csv(os, bc, header.preamble());
    }
    {
        auto os = open_out(out, "flux.csv");
        write_trace_csv(os, flux, header.preamble());
    }
    ordered_json summary{{"header", header.json()},
                         {"max_abs_u", u.max_abs()},
                         {"final_L2", l2_norm_physical(fs.value)},
                         {"final_velocity_L2", l2_norm_physical(fs.velocity)}};
    if (g.nt() >= 2) summary["energy_last_interior_level"] = physical_energy(u, g.nt() - 1);
    write_json(out, "summary.json", summary);
    log << fmt::format("simulate: {} -> {}\n", describe_grid(g), out.string());
    return kExitOk;
}

int cmd_nash(const RunConfig& rc, const fs::path& out, std::ostream& log) {
    const Grid g = rc.make_grid();
    const FollowerConfig cfg = rc.make_follower(g);
    const RunHeader header = make_header("nash", rc, g);
    const Trace w1 = leader_control(rc, cfg);
    NashSolution sol = [&] {
        try {
            return solve_nash_system(w1, cfg);
        } catch (const ConvergenceError& e) {
            write_json(out, "summary.json",
                       ordered_json{{"header", header.json()},
                                    {"status", "not_converged"},
                                    {"message", e.what()},
                                    {"residual_history", e.history()}});
            throw;
        }
    }();

    UniformStream rng(rc.seed);
    double el_max = 0.0;
    const int samples = 10;
    for (int i = 0; i < samples; ++i) {
        const auto r = euler_lagrange_residual(sol, w1, cfg, random_trace(g, cfg.mask2(), rng));
        if (r.scale > 0.0) el_max = std::max(el_max, std::abs(r.value) / r.scale);
    }
    {
        auto os = open_out(out, "u_field.csv");
        write_field_csv(os, sol.u, header.preamble());
    }
    {
        auto os = open_out(out, "p_field.csv");
        write_field_csv(os, sol.p, header.preamble());
    }
    {
        auto os = open_out(out, "w2.csv");
        write_trace_csv(os, sol.w2, header.preamble());
    }
    write_json(out, "summary.json",
               ordered_json{{"header", header.json()},
                            {"status", "converged"},
                            {"method", to_string(cfg.solver.method)},
                            {"iterations", sol.iterations},
                            {"J2", cost_J2(sol.u, sol.w2, cfg)},
                            {"J", cost_J(w1)},
                            {"euler_lagrange_relative_max", el_max},
                            {"euler_lagrange_samples", samples},
                            {"residual_history", sol.residual_history}});
    log << fmt::format("nash: {} iterations, J2 = {:.6e}, EL residual {:.2e}\n", sol.iterations,
                       cost_J2(sol.u, sol.w2, cfg), el_max);
    return kExitOk;
}

int cmd_leader(const RunConfig& rc, const fs::path& out, std::ostream& log) {
    const Grid g = rc.make_grid();
    const FollowerConfig cfg = rc.make_follower(g);
    const RunHeader header = make_header("leader", rc, g);
    const TargetSpec targets = rc.make_targets(cfg);
    LeaderDual dual(targets, cfg, rc.delta);
    const DualResult res = dual.minimize(rc.optimizer);
    const DualReport& r = res.report;

    {
        auto os = open_out(out, "w1_star.csv");
        write_trace_csv(os, res.w1_star, header.preamble());
    }
    {
        auto os = open_out(out, "f0_star.csv");
        write_profile_csv(os, res.f_star.f0, header.preamble());
    }
    {
        auto os = open_out(out, "f1_star.csv");
        write_profile_csv(os, res.f_star.f1, header.preamble());
    }
    {
        auto os = open_out(out, "history.csv");
        write_dual_history_csv(os, r, header.preamble());
    }
    ordered_json report = ordered_json::parse(dual_report_json(r));
    ordered_json doc{{"header", header.json()},
                     {"targets", {{"rho0", targets.rho0}, {"rho1", targets.rho1}}},
                     {"delta", rc.delta},
                     {"report", report}};
    write_json(out, "report.json", doc);
    log << fmt::format("leader: J = {:.6e}, D = {:.6e}, gap = {:.2e}, reached = ({}, {}), {}\n", r.primal_J,
                       r.dual_value, r.gap, r.reached0, r.reached1, r.certified ? "certified" : "not certified");
    for (const auto& w : r.warnings) log << "warning: " << w << '\n';
    return r.certified ? kExitOk : kExitUncertified;
}

int cmd_verify(VerifyLevel level, std::uint64_t seed, const fs::path& out, std::ostream& log) {
    const std::vector<CheckResult> checks = run_verification(level, seed);
    bool ok = true;
    for (const auto& c : checks) {
        ok = ok && c.passed;
        log << fmt::format("{} {}: {} = {:.3e} ({} {:.1e})\n", c.passed ? "PASS" : "FAIL", c.name, c.metric, c.value,
                           c.upper_bound ? "<=" : ">=", c.threshold);
    }
    ordered_json doc{{"header",
                      {{"command", "verify"},
                       {"level", level == VerifyLevel::full ? "full" : "fast"},
                       {"seed", seed},
                       {"grid", "per check"},
                       {"warnings", ordered_json::array()}}},
                     {"checks", ordered_json::parse(verification_report_json(checks))},
                     {"passed", ok}};
    write_json(out, "verify_report.json", doc);
    return ok ? kExitOk : kExitVerifyFailed;
}

int cmd_threshold(const std::vector<double>& ks, const fs::path& out, std::ostream& log) {
    std::vector<std::pair<double, double>> rows;
    for (double k : ks) rows.emplace_back(k, min_control_time(k));
    std::string table = "k,T_min\n";
    for (const auto& [k, t] : rows) table += format_exact(k) + "," + format_exact(t) + "\n";
    log << table;
    if (!out.empty()) {
        auto os = open_out(out, "threshold.csv");
        os << table;
    }
    return kExitOk;
}

namespace {

struct SweepRow {
    double k = 0.0, T = 0.0, sigma = 0.0, radius = 0.0;
    std::string status;
    double rho0 = std::numeric_limits<double>::quiet_NaN();
    double rho1 = std::numeric_limits<double>::quiet_NaN();
    double J = std::numeric_limits<double>::quiet_NaN();
    double dual = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
    double vi = std::numeric_limits<double>::quiet_NaN();
    bool reached0 = false;
    bool reached1 = false;
    int iterations = 0;
    std::vector<std::string> warnings;
};

SweepRow run_cell(const RunConfig& base, double k, double T, double sigma, double radius) {
    SweepRow row;
    row.k = k;
    row.T = T;
    row.sigma = sigma;
    row.radius = radius;
    try {
        RunConfig rc = base;
        rc.domain.k = k;
        rc.domain.T = T;
        rc.domain.validate();
        rc.sigma = sigma;
        if (rc.partition_mode == PartitionMode::time_split && !(rc.t_split < T)) {
            throw ConfigError("t_split outside the cell horizon");
        }
        if (rc.targets->mode == TargetMode::manufactured) {
            rc.targets->radius_fraction = radius;
        } else {
            rc.targets->rho0 *= radius;
            rc.targets->rho1 *= radius;
        }
        const Grid g = rc.make_grid();
        const FollowerConfig cfg = rc.make_follower(g);
        const TargetSpec targets = rc.make_targets(cfg);
        LeaderDual dual(targets, cfg, rc.delta);
        const DualResult res = dual.minimize(rc.optimizer);
        const DualReport& r = res.report;
        row.rho0 = targets.rho0;
        row.rho1 = targets.rho1;
        row.J = r.primal_J;
        row.dual = r.dual_value;
        row.gap = r.gap;
        row.vi = r.vi_residual;
        row.reached0 = r.reached0;
        row.reached1 = r.reached1;
        row.iterations = r.iterations;
        row.warnings = r.warnings;
        row.status = r.certified ? "certified" : "not_certified";
    } catch (const ConvergenceError& e) {
        row.status = "solver_error";
        row.warnings.push_back(e.what());
    } catch (const InstabilityError& e) {
        row.status = "solver_error";
        row.warnings.push_back(e.what());
    } catch (const Error& e) {
        row.status = "config_error";
        row.warnings.push_back(e.what());
    }
    return row;
}

std::string csv_number(double v) { return std::isfinite(v) ? format_exact(v) : "nan"; }

}  // namespace

int cmd_sweep(const RunConfig& rc, const fs::path& out, int workers, std::ostream& log) {
    if (!rc.targets) throw ConfigError("sweep needs a 'targets' section");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    auto axis = [](const std::vector<double>& v, double base) { return v.empty() ? std::vector<double>{base} : v; };
    const auto ks = axis(rc.sweep.k, rc.domain.k);
    const auto Ts = axis(rc.sweep.T, rc.domain.T);
    const auto sigmas = axis(rc.sweep.sigma, rc.sigma);
    const auto radii =
        axis(rc.sweep.radius, rc.targets->mode == TargetMode::manufactured ? rc.targets->radius_fraction : 1.0);

    struct Cell {
        double k, T, sigma, radius;
    };
    std::vector<Cell> cells;
    for (double k : ks)
        for (double T : Ts)
            for (double s : sigmas)
                for (double r : radii) cells.push_back({k, T, s, r});

    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            rows[i] = run_cell(rc, cells[i].k, cells[i].T, cells[i].sigma, cells[i].radius);
        }
    };
    const int nthreads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), cells.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    CsvPreamble pre{"command=sweep", "config_hash=" + hash_hex(rc.hash), fmt::format("seed={}", rc.seed),
                    fmt::format("grid=ny={} nt={} cfl_safety={}", rc.ny, rc.nt ? std::to_string(*rc.nt) : "cfl",
                                format_exact(rc.cfl_safety))};
    int code = kExitOk;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        try {
            for (const auto& w : check_admissible(DomainSpec{rows[i].k, rows[i].T, rc.domain.allow_k_zero}).warnings()) {
                pre.push_back(fmt::format("warning[cell {}]={}", i, w));
            }
        } catch (const Error&) {
        }
        for (const auto& w : rows[i].warnings) pre.push_back(fmt::format("warning[cell {}]={}", i, w));
        if (rows[i].status == "solver_error") code = std::max<int>(code, kExitSolver);
        if (rows[i].status == "not_certified" && code == kExitOk) code = kExitUncertified;
        if (rows[i].status == "config_error") code = kExitConfig;
    }
    auto os = open_out(out, "sweep.csv");
    for (const auto& line : pre) os << "# " << line << '\n';
    os << "cell,k,T,sigma,radius,rho0,rho1,status,J,dual_value,gap,vi_residual,reached0,reached1,iterations\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SweepRow& r = rows[i];
        os << i << ',' << csv_number(r.k) << ',' << csv_number(r.T) << ',' << csv_number(r.sigma) << ','
           << csv_number(r.radius) << ',' << csv_number(r.rho0) << ',' << csv_number(r.rho1) << ',' << r.status << ','
           << csv_number(r.J) << ',' << csv_number(r.dual) << ',' << csv_number(r.gap) << ',' << csv_number(r.vi)
           << ',' << (r.reached0 ? 1 : 0) << ',' << (r.reached1 ? 1 : 0) << ',' << r.iterations << '\n';
    }
    log << fmt::format("sweep: {} cells -> {}\n", rows.size(), (out / "sweep.csv").string());
    return code;
}

}  // namespace hcw
