#include "hcw/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <fmt/core.h>
#include <json.hpp>

#include "hcw/detail/kkt.hpp"
#include "hcw/errors.hpp"

namespace hcw {

double dalembert_reference(const std::function<double(double)>& bc0, double x, double t) {
    if (x < 0.0 || x > 1.0) throw DomainError(fmt::format("x = {} outside [0, 1]", x));
    auto b = [&](double s) { return s < 0.0 ? 0.0 : bc0(s); };
    double u = 0.0;
    for (int m = 0; t - x - 2.0 * m >= 0.0; ++m) u += b(t - x - 2.0 * m);
    for (int m = 0; t + x - 2.0 - 2.0 * m >= 0.0; ++m) u -= b(t + x - 2.0 - 2.0 * m);
    return u;
}

// --- monolithic -----------------------------------------------------------------------------

const char* to_string(CoupledSystem s) {
    switch (s) {
        case CoupledSystem::nash: return "nash";
        case CoupledSystem::free_part: return "free_part";
        case CoupledSystem::leader_part: return "leader_part";
        case CoupledSystem::adjoint_pair: return "adjoint_pair";
    }
    return "?";
}

namespace detail {

KktSolution kkt_follower_solve(const FollowerConfig& cfg, const Trace& base, const std::optional<Field>& seed0) {
    const Grid& g = cfg.grid;
    if (g.ny() > kMonolithicMaxNy) {
        throw ConfigError(fmt::format("monolithic solve limited to ny <= {} (got {})", kMonolithicMaxNy, g.ny()));
    }
    const int ny = g.ny();
    const int nt = g.nt();
    const auto N = static_cast<Eigen::Index>(g.node_count());
    const Eigen::Index size = 2 * N + nt + 1;
    const auto zcol = [&](int n) { return 2 * N + n; };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * 20);
    const SpaceTimeOperator op(g, Direction::forward);
    auto add_band = [&](Eigen::Index row, const BandRow& band, int j, int level) {
        for (int o = -2; o <= 2; ++o) {
            const double c = band[o + 2];
            if (c == 0.0) continue;
            const auto col = static_cast<Eigen::Index>(g.index(j + o, level));
            trip.emplace_back(row, col, c);               // E
            trip.emplace_back(N + col, N + row, c);       // E^T
        }
    };
    for (int m = 0; m <= nt; ++m) {
        const LevelBlocks b = op.blocks(m);
        for (int j = 0; j <= ny; ++j) {
            const auto row = static_cast<Eigen::Index>(g.index(j, b.level));
            add_band(row, b.diag[j], j, b.level);
            if (b.prev1 >= 0) add_band(row, b.coupling1[j], j, b.prev1);
            if (b.prev2 >= 0) add_band(row, b.coupling2[j], j, b.prev2);
        }
    }
    for (Eigen::Index i = 0; i < N; ++i) {
        const int j = static_cast<int>(i % (ny + 1));
        const int n = static_cast<int>(i / (ny + 1));
        trip.emplace_back(N + i, i, -g.volume_weight(j, n));
    }
    for (int n = 0; n <= nt; ++n) {
        if (cfg.mask2()[n]) {
            trip.emplace_back(static_cast<Eigen::Index>(g.index(0, n)), zcol(n), -1.0);
            trip.emplace_back(zcol(n), zcol(n), cfg.sigma * g.time_weight(n));
            trip.emplace_back(zcol(n), N + static_cast<Eigen::Index>(g.index(0, n)), 1.0);
        } else {
            trip.emplace_back(zcol(n), zcol(n), 1.0);
        }
    }
    Eigen::SparseMatrix<double> K(size, size);
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
    WaveProblem prob;
    prob.bc0 = base;
    const std::vector<double> r = assemble_rhs(op, prob);
    for (Eigen::Index i = 0; i < N; ++i) rhs[i] = r[static_cast<std::size_t>(i)];
    if (seed0) {
        for (Eigen::Index i = 0; i < N; ++i) rhs[N + i] = seed0->values()[static_cast<std::size_t>(i)];
    }

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) {
        throw ConfigError(fmt::format("monolithic system could not be factorized: {}", lu.lastErrorMessage()));
    }
    const Eigen::VectorXd x = lu.solve(rhs);
    const double bnorm = rhs.norm();
    const double residual = (K * x - rhs).norm() / std::max(bnorm, std::numeric_limits<double>::min());
    if (!std::isfinite(residual) || residual > 1e-8) {
        throw ConfigError(fmt::format(
            "monolithic system is numerically singular (relative residual {:.3g} after factorization)", residual));
    }

    KktSolution out{Field(g), Field(g), Trace(g), bnorm == 0.0 ? 0.0 : residual};
    for (Eigen::Index i = 0; i < N; ++i) {
        out.state.values()[static_cast<std::size_t>(i)] = x[i];
        out.multipliers.values()[static_cast<std::size_t>(i)] = x[N + i];
    }
    for (int n = 0; n <= nt; ++n) out.follower[n] = x[zcol(n)];
    out.follower.restrict_to(cfg.mask2());
    return out;
}

}  // namespace detail

MonolithicResult monolithic_solve(CoupledSystem system, const FollowerConfig& cfg, const MonolithicInputs& in) {
    cfg.validate();
    const Grid& g = cfg.grid;
    Trace base(g);
    std::optional<Field> seed0;
    switch (system) {
        case CoupledSystem::nash:
        case CoupledSystem::leader_part:
            if (in.w1) base = leader_trace(cfg, *in.w1);
            break;
        case CoupledSystem::free_part:
            break;
        case CoupledSystem::adjoint_pair: {
            if (!in.f0 || !in.f1) throw PreconditionError("adjoint pair needs f0 and f1");
            const int ny = g.ny();
            const double h = in.f0->h();
            std::vector<double> value_coef(ny + 1, 0.0), velocity_coef(ny + 1, 0.0);
            for (int j = 0; j <= ny; ++j) {
                const double w = (j == 0 || j == ny) ? 0.5 : 1.0;
                const bool interior = j > 0 && j < ny;
                velocity_coef[j] = interior ? h * (*in.f0)[j] : 0.0;
                value_coef[j] = (interior ? in.delta * h * (*in.f0)[j] : 0.0) - w * h * (*in.f1)[j];
            }
            seed0 = final_state_seed(g, value_coef, velocity_coef);
            break;
        }
    }
    if ((system == CoupledSystem::nash || system == CoupledSystem::free_part) && cfg.u_tilde2) {
        seed0 = -1.0 * quadrature_weighted(*cfg.u_tilde2);
    }

    detail::KktSolution k = detail::kkt_follower_solve(cfg, base, seed0);
    MonolithicResult res{std::move(k.state), Field(g), std::move(k.follower), Trace(g), k.residual};
    // The source at center level c enters the row of level c + 1.
    for (int n = 1; n <= g.nt(); ++n) {
        for (int j = 1; j < g.ny(); ++j) {
            res.adjoint(j, n - 1) = k.multipliers(j, n) / g.volume_weight(j, n - 1);
        }
    }
    for (int n = 0; n <= g.nt(); ++n) res.boundary_derivative[n] = k.multipliers(0, n) / g.time_weight(n);
    if (system == CoupledSystem::adjoint_pair) {
        for (int j = 1; j < g.ny(); ++j) res.adjoint(j, g.nt()) = (*in.f0)[j];
    }
    return res;
}

// --- randomness -------------------------------------------------------------------------------

std::uint64_t UniformStream::next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double UniformStream::next() { return 2.0 * static_cast<double>(next_u64() >> 11) * 0x1.0p-53 - 1.0; }

Trace random_trace(const Grid& grid, const std::vector<bool>& mask, UniformStream& rng) {
    Trace tr(grid);
    for (int n = 0; n <= grid.nt(); ++n) tr[n] = rng.next();
    tr.restrict_to(mask);
    return tr;
}

SpatialProfile random_h10_profile(const Grid& grid, UniformStream& rng) {
    SpatialProfile f = SpatialProfile::at_final_time(grid);
    for (int j = 1; j < grid.ny(); ++j) f[j] = rng.next();
    return f;
}

SpatialProfile random_l2_profile(const Grid& grid, UniformStream& rng) {
    SpatialProfile f = SpatialProfile::at_final_time(grid);
    for (int j = 0; j <= grid.ny(); ++j) f[j] = rng.next();
    return f;
}

// --- transpose check ------------------------------------------------------------------------

TransposeCheckResult transpose_check(const FollowerConfig& cfg, const TransposeCheckOptions& opt) {
    if (opt.trials < 1) throw ConfigError("transpose_check needs at least one trial");
    const Grid& g = cfg.grid;
    UniformStream rng(opt.seed);
    TransposeCheckResult out;
    for (int trial = 0; trial < opt.trials; ++trial) {
        const Trace w1 = random_trace(g, cfg.mask1(), rng);
        const SpatialProfile f0 = random_h10_profile(g, rng);
        const SpatialProfile f1 = random_l2_profile(g, rng);

        const ControlImage aw = apply_A(w1, cfg, opt.delta);
        double lhs = control_pairing(aw, f0, f1);
        if (opt.drop_jacobian) lhs /= f0.alpha();
        const AdjointPair pair = apply_A_star(f0, f1, cfg, opt.delta);
        const double rhs = pair.leader_trace.inner(w1);

        const double aw_norm =
            std::hypot(hminus1_norm_physical(aw.velocity_part), l2_norm_physical(aw.value_part));
        const double f_norm = std::hypot(h10_norm_physical(f0), l2_norm_physical(f1));
        const double scale = aw_norm * f_norm + pair.leader_trace.norm() * w1.norm();
        const double err = scale == 0.0 ? std::abs(lhs - rhs) : std::abs(lhs - rhs) / scale;
        out.errors.push_back(err);
        out.max_relative_error = std::max(out.max_relative_error, err);
    }
    return out;
}

// --- convergence -----------------------------------------------------------------------------

double smooth_pulse(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double s = std::sin(std::numbers::pi * t);
    return s * s * s;
}

namespace {

Grid rung(const OracleCase& oc, int ny) {
    const Grid coarse = Grid::with_cfl(oc.domain, oc.ladder.front(), oc.cfl_safety);
    const int factor = ny / oc.ladder.front();
    if (factor * oc.ladder.front() != ny) {
        throw ConfigError("convergence ladder must consist of multiples of its first rung");
    }
    return Grid(oc.domain, ny, coarse.nt() * factor, oc.cfl_safety);
}

double final_error(const Field& coarse, const Field& fine) {
    const int ratio = fine.grid().ny() / coarse.grid().ny();
    const int nc = coarse.grid().nt();
    const int nf = fine.grid().nt();
    double err = 0.0;
    for (int j = 0; j <= coarse.grid().ny(); ++j) {
        err = std::max(err, std::abs(coarse(j, nc) - fine(j * ratio, nf)));
    }
    return err;
}

}  // namespace

std::vector<ConvergenceRow> convergence_study(const OracleCase& oc) {
    if (oc.ladder.size() < 3) throw ConfigError("convergence study needs a ladder of at least 3 grids");
    if (!oc.problem) throw ConfigError("oracle case has no problem generator");
    oc.domain.validate();
    std::optional<Field> reference;
    if (!oc.exact) {
        const Grid gref = rung(oc, oc.ladder.back() * oc.reference_factor);
        reference = solve(gref, oc.problem(gref));
    }
    std::vector<ConvergenceRow> rows;
    for (int ny : oc.ladder) {
        const Grid g = rung(oc, ny);
        const Field v = solve(g, oc.problem(g));
        double err = 0.0;
        if (oc.exact) {
            for (int n = 0; n <= g.nt(); ++n) {
                for (int j = 0; j <= ny; ++j) {
                    const double x = g.y(j) * g.alpha_at(n);
                    err = std::max(err, std::abs(v(j, n) - oc.exact(x, g.t(n))));
                }
            }
        } else {
            err = final_error(v, *reference);
        }
        ConvergenceRow row{ny, g.nt(), err, std::nullopt};
        if (!rows.empty() && err > 0.0 && rows.back().error > 0.0) {
            row.order = std::log2(rows.back().error / err) / std::log2(static_cast<double>(ny) / rows.back().ny);
        }
        rows.push_back(row);
    }
    return rows;
}

OracleCase dalembert_case() {
    OracleCase oc;
    oc.name = "dalembert_k0";
    oc.domain = DomainSpec{0.0, 2.0, true};
    oc.problem = [](const Grid& g) {
        WaveProblem p;
        Trace bc(g);
        for (int n = 0; n <= g.nt(); ++n) bc[n] = smooth_pulse(g.t(n));
        p.bc0 = bc;
        return p;
    };
    oc.exact = [](double x, double t) { return dalembert_reference(smooth_pulse, x, t); };
    oc.ladder = {40, 80, 160};
    return oc;
}

OracleCase self_convergence_case(double k) {
    OracleCase oc;
    oc.name = fmt::format("self_convergence_k{}", k);
    oc.domain = DomainSpec{k, 2.0, false};
    oc.problem = [](const Grid& g) {
        WaveProblem p;
        Trace bc(g);
        for (int n = 0; n <= g.nt(); ++n) bc[n] = smooth_pulse(g.t(n));
        p.bc0 = bc;
        return p;
    };
    oc.ladder = {40, 80, 160};
    oc.reference_factor = 4;
    return oc;
}

OracleCase linear_case(double k) {
    OracleCase oc;
    oc.name = fmt::format("linear_xt_k{}", k);
    oc.domain = DomainSpec{k, 1.0, true};
    oc.problem = [](const Grid& g) {
        WaveProblem p;
        Trace right(g, Side::right);
        for (int n = 0; n <= g.nt(); ++n) right[n] = g.alpha_at(n) * g.t(n);
        p.bc1 = right;
        SpatialProfile v1(g.ny(), 0.0, g.domain());
        for (int j = 0; j <= g.ny(); ++j) v1[j] = v1.x(j);
        p.data.value = SpatialProfile(g.ny(), 0.0, g.domain());
        p.data.velocity = v1;
        return p;
    };
    oc.exact = [](double x, double t) { return x * t; };
    oc.ladder = {10, 20, 40};
    return oc;
}

// --- reports ----------------------------------------------------------------------------------

CheckResult make_check(std::string name, std::string metric, double value, double threshold, bool upper_bound,
                       std::string detail) {
    CheckResult c{std::move(name), std::move(metric), value, threshold, upper_bound, false, std::move(detail)};
    c.passed = std::isfinite(value) && (upper_bound ? value <= threshold : value >= threshold);
    return c;
}

VerifyLevel verify_level_from_string(const std::string& name) {
    if (name == "fast") return VerifyLevel::fast;
    if (name == "full") return VerifyLevel::full;
    throw ConfigError(fmt::format("unknown verification level '{}' (expected fast or full)", name));
}

namespace {

double worst_order_deviation(const std::vector<ConvergenceRow>& rows, double expected) {
    double worst = 0.0;
    for (const auto& r : rows) {
        if (r.order) worst = std::max(worst, std::abs(*r.order - expected));
    }
    return worst;
}

std::string describe(const std::vector<ConvergenceRow>& rows) {
    std::string s;
    for (const auto& r : rows) {
        s += fmt::format("ny={} err={:.3e}", r.ny, r.error);
        if (r.order) s += fmt::format(" order={:.3f}", *r.order);
        s += "; ";
    }
    return s;
}

Field smooth_target(const Grid& g) {
    Field u(g);
    for (int n = 0; n <= g.nt(); ++n) {
        for (int j = 0; j <= g.ny(); ++j) {
            u(j, n) = std::sin(std::numbers::pi * g.y(j)) * std::sin(std::numbers::pi * g.t(n) / g.T());
        }
    }
    return u;
}

double relative_difference(const Field& a, const Field& b) {
    const Field d = a - b;
    const double scale = std::max(a.max_abs(), b.max_abs());
    return scale == 0.0 ? d.max_abs() : d.max_abs() / scale;
}

}  // namespace

std::vector<CheckResult> run_verification(VerifyLevel level, std::uint64_t seed) {
    const bool full = level == VerifyLevel::full;
    std::vector<CheckResult> out;

    for (OracleCase oc : {dalembert_case(), self_convergence_case(0.1)}) {
        if (!full) {
            oc.ladder = {20, 40, 80};
        }
        const auto rows = convergence_study(oc);
        out.push_back(make_check(oc.name + "_order", "max |observed order - 2|",
                                 worst_order_deviation(rows, oc.expected_order), oc.order_tolerance, true,
                                 describe(rows)));
    }
    {
        const auto rows = convergence_study(linear_case(0.0));
        double worst = 0.0;
        for (const auto& r : rows) worst = std::max(worst, r.error);
        out.push_back(make_check("linear_exactness", "max nodal error", worst, 1e-12, true, describe(rows)));
    }

    const int ny = full ? 41 : 21;
    const Grid g = Grid::with_cfl(DomainSpec{0.1, 4.0}, ny);
    FollowerConfig cfg(g);
    cfg.sigma = 1.0;
    {
        TransposeCheckOptions opt;
        opt.trials = full ? 20 : 5;
        opt.seed = seed;
        const auto res = transpose_check(cfg, opt);
        out.push_back(make_check("transpose_identity", "max relative error", res.max_relative_error, 1e-8));
        opt.drop_jacobian = true;
        opt.trials = 2;
        const auto neg = transpose_check(cfg, opt);
        out.push_back(make_check("transpose_negative_control", "max relative error (must be large)",
                                 neg.max_relative_error, 1e-3, false));
    }
    {
        cfg.u_tilde2 = smooth_target(g);
        UniformStream rng(seed);
        const Trace w1 = random_trace(g, cfg.mask1(), rng);
        const NashSolution sol = solve_nash_system(w1, cfg);
        MonolithicInputs in;
        in.w1 = w1;
        const MonolithicResult mono = monolithic_solve(CoupledSystem::nash, cfg, in);
        const double diff = std::max(relative_difference(sol.u, mono.state), relative_difference(sol.p, mono.adjoint));
        out.push_back(make_check("nash_vs_monolithic", "max relative difference of (u, p)", diff, 1e-6));
        out.push_back(make_check("monolithic_residual", "relative residual", mono.residual, 1e-10));

        double worst = 0.0;
        for (int i = 0; i < (full ? 50 : 10); ++i) {
            const Trace what = random_trace(g, cfg.mask2(), rng);
            const auto r = euler_lagrange_residual(sol, w1, cfg, what);
            worst = std::max(worst, std::abs(r.value) / r.scale);
        }
        out.push_back(make_check("euler_lagrange", "max |residual| / scale", worst, 1e-6));
    }
    return out;
}

std::string verification_report_json(const std::vector<CheckResult>& checks) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name},
                       {"metric", c.metric},
                       {"value", c.value},
                       {"threshold", c.threshold},
                       {"comparison", c.upper_bound ? "<=" : ">="},
                       {"passed", c.passed},
                       {"detail", c.detail}});
    }
    return arr.dump(2);
}

}  // namespace hcw
