#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hcw/coupled.hpp"
#include "hcw/errors.hpp"
#include "hcw/verify.hpp"

using namespace hcw;
using std::numbers::pi;

namespace {

FollowerConfig smooth_config(int ny = 41, double sigma = 1.0) {
    FollowerConfig cfg(Grid::with_cfl(DomainSpec{0.1, 4.0}, ny));
    cfg.sigma = sigma;
    Field ut(cfg.grid);
    for (int n = 0; n <= cfg.grid.nt(); ++n)
        for (int j = 0; j <= cfg.grid.ny(); ++j)
            ut(j, n) = 0.5 * std::sin(pi * cfg.grid.y(j)) * std::sin(pi * cfg.grid.t(n) / 4.0);
    cfg.u_tilde2 = ut;
    return cfg;
}

Trace smooth_leader(const FollowerConfig& cfg, double freq = 1.0) {
    Trace w(cfg.grid);
    for (int n = 0; n <= cfg.grid.nt(); ++n) w[n] = std::pow(std::sin(freq * pi * cfg.grid.t(n) / 4.0), 3);
    return leader_trace(cfg, w);
}

double rel_diff(const Field& a, const Field& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        num = std::max(num, std::abs(a.values()[i] - b.values()[i]));
        den = std::max(den, std::abs(b.values()[i]));
    }
    return den > 0.0 ? num / den : num;
}

Field state_for(const Trace& w1, const Trace& w2, const FollowerConfig& cfg) {
    WaveProblem p;
    p.bc0 = w1 + w2;
    return solve_forward(cfg.grid, p);
}

}  // namespace

TEST_SUITE("coupled") {

TEST_CASE("zero leader and zero target give the zero equilibrium") {
    FollowerConfig cfg(Grid::with_cfl(DomainSpec{0.1, 4.0}, 20));
    const auto sol = solve_nash_system(Trace(cfg.grid), cfg);
    CHECK(sol.u.max_abs() == 0.0);
    CHECK(sol.p.max_abs() == 0.0);
    CHECK(sol.w2.max_abs() == 0.0);
    const auto free = solve_free_part(cfg);
    CHECK(free.u.max_abs() == 0.0);
    CHECK(solve_leader_part(Trace(cfg.grid), cfg).u.max_abs() == 0.0);
}

TEST_CASE("equilibrium is linear in the leader and splits into free and leader parts") {
    const auto cfg = smooth_config(24);
    const Trace a = smooth_leader(cfg, 1.0);
    const Trace b = smooth_leader(cfg, 2.0);
    FollowerConfig zero_target = cfg;
    zero_target.u_tilde2.reset();
    const auto sa = solve_nash_system(a, zero_target);
    const auto sb = solve_nash_system(b, zero_target);
    const auto sab = solve_nash_system(a + b, zero_target);
    CHECK(rel_diff(sab.u, sa.u + sb.u) <= 1e-10);
    CHECK(rel_diff(sab.p, sa.p + sb.p) <= 1e-10);

    const auto full = solve_nash_system(a, cfg);
    const auto free = solve_free_part(cfg);
    const auto lead = solve_leader_part(a, cfg);
    CHECK(rel_diff(full.u, free.u + lead.u) <= 1e-10);
    CHECK(rel_diff(full.p, free.p + lead.p) <= 1e-10);
}

TEST_CASE("Krylov equilibrium matches the monolithic direct solve") {
    const auto cfg = smooth_config(41);
    const Trace w1 = smooth_leader(cfg);
    const auto sol = solve_nash_system(w1, cfg);
    const auto mono = monolithic_solve(CoupledSystem::nash, cfg, MonolithicInputs{w1, {}, {}, 0.0});
    CHECK(rel_diff(sol.u, mono.state) <= 1e-6);
    CHECK(rel_diff(sol.p, mono.adjoint) <= 1e-6);
    CHECK(mono.residual <= 1e-10);

    const auto free = solve_free_part(cfg);
    const auto mono_free = monolithic_solve(CoupledSystem::free_part, cfg, MonolithicInputs{});
    CHECK(rel_diff(free.u, mono_free.state) <= 1e-6);
    const auto lead = solve_leader_part(w1, cfg);
    const auto mono_lead = monolithic_solve(CoupledSystem::leader_part, cfg, MonolithicInputs{w1, {}, {}, 0.0});
    CHECK(rel_diff(lead.u, mono_lead.state) <= 1e-6);
}

TEST_CASE("Picard agrees with Krylov where it converges") {
    auto cfg = smooth_config(24);
    const Trace w1 = smooth_leader(cfg);
    const auto krylov = solve_nash_system(w1, cfg);
    cfg.solver.method = FollowerMethod::picard;
    cfg.solver.monolithic_fallback = false;
    const auto picard = solve_nash_system(w1, cfg);
    CHECK(rel_diff(picard.u, krylov.u) <= 1e-8);
}

TEST_CASE("Picard divergence is reported with its history") {
    auto cfg = smooth_config(24, 0.01);
    cfg.solver.method = FollowerMethod::picard;
    cfg.solver.monolithic_fallback = false;
    try {
        solve_nash_system(smooth_leader(cfg), cfg);
        FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
        CHECK_FALSE(e.history().empty());
    }
    cfg.solver.monolithic_fallback = true;
    CHECK_NOTHROW(solve_nash_system(smooth_leader(cfg), cfg));
}

TEST_CASE("Euler-Lagrange residual and minimality") {
    const auto cfg = smooth_config(41);
    const Trace w1 = smooth_leader(cfg);
    const auto sol = solve_nash_system(w1, cfg);
    CHECK(euler_lagrange_residual(sol, w1, cfg, Trace(cfg.grid)).value == 0.0);

    UniformStream rng(99);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto r = euler_lagrange_residual(sol, w1, cfg, random_trace(cfg.grid, cfg.mask2(), rng));
        worst = std::max(worst, std::abs(r.value) / r.scale);
    }
    CHECK(worst <= 1e-6);

    // Follower characterization: sigma w2 = -p_x on Sigma_2 in this sign convention.
    Trace res = cfg.sigma * sol.w2 + sol.p_x;
    res.restrict_to(cfg.mask2());
    CHECK(res.norm() <= 1e-9 * sol.p_x.norm());

    const double j_star = cost_J2(sol.u, sol.w2, cfg);
    for (int i = 0; i < 50; ++i) {
        const Trace eta = random_trace(cfg.grid, cfg.mask2(), rng);
        for (double eps : {1e-2, 1e-1}) {
            const Trace w2 = sol.w2 + eps * eta;
            CHECK(cost_J2(state_for(w1, w2, cfg), w2, cfg) > j_star);
        }
    }
}

TEST_CASE("follower cost examples") {
    FollowerConfig cfg(Grid::with_cfl(DomainSpec{0.1, 4.0}, 16));
    cfg.sigma = 2.0;
    Trace one(cfg.grid);
    for (auto& v : one.values()) v = 1.0;
    CHECK(cost_J2(Field(cfg.grid), one, cfg) == doctest::Approx(4.0).epsilon(1e-13));

    auto s = smooth_config(16);
    CHECK(cost_J2(*s.u_tilde2, Trace(s.grid), s) == 0.0);
    s.u_tilde2.reset();
    const Trace w1 = smooth_leader(s);
    const auto sol = solve_nash_system(w1, s);
    CHECK(cost_J2(3.0 * sol.u, 3.0 * sol.w2, s) == doctest::Approx(9.0 * cost_J2(sol.u, sol.w2, s)).epsilon(1e-13));
}

TEST_CASE("leader cost examples") {
    const Grid g4 = Grid::with_cfl(DomainSpec{0.1, 4.0}, 16);
    Trace one(g4);
    for (auto& v : one.values()) v = 1.0;
    CHECK(cost_J(one) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(cost_J(Trace(g4)) == 0.0);
    const Grid g2 = Grid::with_cfl(DomainSpec{0.1, 2.0}, 200);
    Trace s(g2);
    for (int n = 0; n <= g2.nt(); ++n) s[n] = std::sin(pi * g2.t(n));
    CHECK(cost_J(s) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("control operator and its adjoint") {
    const auto cfg = smooth_config(24);
    const Trace w1 = smooth_leader(cfg);
    const auto zero = apply_A(Trace(cfg.grid), cfg, 0.0);
    CHECK(l2_norm_physical(zero.value_part) == 0.0);
    const auto a = apply_A(w1, cfg, 0.3);
    const auto a3 = apply_A(-2.0 * w1, cfg, 0.3);
    for (int j = 0; j <= cfg.grid.ny(); ++j) {
        CHECK(a3.value_part[j] == doctest::Approx(-2.0 * a.value_part[j]).epsilon(1e-10));
        CHECK(a3.velocity_part[j] == doctest::Approx(-2.0 * a.velocity_part[j]).epsilon(1e-10));
    }
    const SpatialProfile z = SpatialProfile::at_final_time(cfg.grid);
    CHECK(apply_A_star(z, z, cfg, 0.0).leader_trace.max_abs() == 0.0);

    SpatialProfile bad = z;
    bad[0] = 1.0;
    CHECK_THROWS_AS(apply_A_star(bad, z, cfg, 0.0), PreconditionError);
}

TEST_CASE("decoupled adjoint equals a single adjoint sweep") {
    FollowerConfig cfg(Grid::with_cfl(DomainSpec{0.1, 4.0}, 24));
    const int nt = cfg.grid.nt();
    cfg.partition.mode = PartitionMode::time_split;
    cfg.partition.mask1.assign(nt + 1, true);
    cfg.partition.mask2.assign(nt + 1, false);
    UniformStream rng(3);
    const SpatialProfile f0 = random_h10_profile(cfg.grid, rng);
    const SpatialProfile f1 = random_l2_profile(cfg.grid, rng);
    const double delta = 0.2;
    const auto pair = apply_A_star(f0, f1, cfg, delta);

    // <<A w, f>> = int (g_t(T) + delta g(T)) f0 dx - int g(T) f1 dx, trapezoid in x.
    const int ny = cfg.grid.ny();
    const double h = f0.h();
    std::vector<double> value_coef(ny + 1), velocity_coef(ny + 1);
    for (int j = 0; j <= ny; ++j) {
        const double w = (j == 0 || j == ny) ? 0.5 : 1.0;
        velocity_coef[j] = w * h * f0[j];
        value_coef[j] = delta * w * h * f0[j] - w * h * f1[j];
    }
    const Trace direct = adjoint_sweep(cfg.grid, final_state_seed(cfg.grid, value_coef, velocity_coef)).boundary_derivative();
    double m = 0.0;
    for (int n = 0; n <= nt; ++n) m = std::max(m, std::abs(pair.leader_trace[n] - direct[n]));
    CHECK(m <= 1e-10 * std::max(1.0, direct.max_abs()));
    CHECK(pair.psi.max_abs() == 0.0);
}

TEST_CASE("coupling identity between leader part and adjoint pair") {
    const auto cfg = smooth_config(24, 0.5);
    UniformStream rng(5);
    const Trace w1 = smooth_leader(cfg);
    const auto lead = solve_leader_part(w1, cfg);
    const auto pair = apply_A_star(random_h10_profile(cfg.grid, rng), random_l2_profile(cfg.grid, rng), cfg, 0.0);
    // int int g psi dx dt = -(1/sigma) int_{Sigma_2} q_x phi_x dt
    const double lhs = lead.u.integral_product(pair.psi);
    Trace phix = pair.phi_x;
    phix.restrict_to(cfg.mask2());
    const double rhs = -lead.p_x.inner(phix) / cfg.sigma;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("transpose identity in both partition modes") {
    auto cfg = smooth_config(24);
    CHECK(transpose_check(cfg, {5, 1, 0.0, false}).max_relative_error <= 1e-8);
    cfg.partition = SigmaPartition::time_split(cfg.grid.nt(), cfg.grid.dt(), 2.0);
    CHECK(transpose_check(cfg, {5, 2, 0.4, false}).max_relative_error <= 1e-8);
}

TEST_CASE("configuration errors") {
    auto cfg = smooth_config(16);
    cfg.sigma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(follower_method_from_string("newton"), ConfigError);
    auto c2 = smooth_config(16);
    Trace w1(c2.grid);
    c2.partition = SigmaPartition::time_split(c2.grid.nt(), c2.grid.dt(), 1.0);
    w1[c2.grid.nt()] = 1.0;
    CHECK_THROWS_AS(solve_nash_system(w1, c2), PreconditionError);
}

}
