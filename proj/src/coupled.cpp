#include "hcw/coupled.hpp"

#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "hcw/detail/kkt.hpp"
#include "hcw/errors.hpp"

namespace hcw {

const char* to_string(FollowerMethod m) { return m == FollowerMethod::krylov ? "krylov" : "picard"; }

FollowerMethod follower_method_from_string(const std::string& name) {
    if (name == "krylov" || name == "cg") return FollowerMethod::krylov;
    if (name == "picard") return FollowerMethod::picard;
    throw ConfigError(fmt::format("unknown follower method '{}' (expected krylov or picard)", name));
}

FollowerConfig::FollowerConfig(const Grid& g) : grid(g), partition(SigmaPartition::overlap(g.nt())) {}

void FollowerConfig::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ConfigError(fmt::format("follower weight sigma must be positive, got {}", sigma));
    }
    if (u_tilde2) grid.require_same(u_tilde2->grid(), "desired trajectory");
    partition.validate();
    if (partition.mask1.size() != static_cast<std::size_t>(grid.nt() + 1)) {
        throw ShapeError("partition does not match the time grid");
    }
    const auto& s = solver;
    if (s.max_iters < 1) throw ConfigError("solver max_iters must be positive");
    if (!(s.tol > 0.0)) throw ConfigError("solver tol must be positive");
    if (!(s.relaxation > 0.0 && s.relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
    if (!(s.relaxation_floor > 0.0 && s.relaxation_floor <= s.relaxation)) {
        throw ConfigError("relaxation floor must lie in (0, relaxation]");
    }
}

Field quadrature_weighted(const Field& f) {
    const Grid& g = f.grid();
    Field out(g);
    for (int n = 0; n <= g.nt(); ++n) {
        for (int j = 0; j <= g.ny(); ++j) out(j, n) = g.volume_weight(j, n) * f(j, n);
    }
    return out;
}

namespace {

void require_masked(const Trace& tr, const std::vector<bool>& mask, const char* what) {
    if (tr.values().size() != mask.size()) throw ShapeError(fmt::format("{} does not match the time grid", what));
    for (std::size_t n = 0; n < mask.size(); ++n) {
        if (!mask[n] && tr[static_cast<int>(n)] != 0.0) {
            throw PreconditionError(fmt::format("{} is nonzero outside its boundary part (node {})", what, n));
        }
    }
}

Field forward_from_trace(const Grid& g, const Trace& bc) {
    WaveProblem prob;
    prob.bc0 = bc;
    return solve_forward(g, prob);
}

struct Equilibrium {
    Trace follower;
    Field state;
    AdjointSweep sweep;
    int iterations = 0;
    std::vector<double> history;
};

// sigma z = -P W_Sigma^{-1} F^T (seed0 + W_Q F (base + z)), F the boundary-to-state map.
class FollowerEquation {
public:
    FollowerEquation(const FollowerConfig& cfg, Trace base, std::optional<Field> seed0)
        : cfg_(cfg), base_(std::move(base)), seed0_(std::move(seed0)) {}

    Field state(const Trace& z) const {
        Trace bc = base_;
        bc += z;
        return forward_from_trace(cfg_.grid, bc);
    }

    AdjointSweep sweep(const Field& state) const {
        Field s = quadrature_weighted(state);
        if (seed0_) s += *seed0_;
        return adjoint_sweep(cfg_.grid, s);
    }

    // -(1/sigma) P of the boundary derivative
    Trace follower_of(const AdjointSweep& sw) const {
        Trace r = sw.boundary_derivative();
        r *= -1.0 / cfg_.sigma;
        r.restrict_to(cfg_.mask2());
        return r;
    }

    // d + (1/sigma) P G d, G the linear part of the response
    Trace apply_operator(const Trace& d) const {
        const Field v = forward_from_trace(cfg_.grid, d);
        Trace out = d;
        out -= follower_of(adjoint_sweep(cfg_.grid, quadrature_weighted(v)));
        return out;
    }

    Equilibrium finish(Trace z, int iterations, std::vector<double> history) const {
        Field u = state(z);
        AdjointSweep sw = sweep(u);
        return {std::move(z), std::move(u), std::move(sw), iterations, std::move(history)};
    }

    Equilibrium solve() const {
        try {
            return cfg_.solver.method == FollowerMethod::krylov ? conjugate_gradients() : picard();
        } catch (const ConvergenceError&) {
            if (!cfg_.solver.monolithic_fallback || cfg_.grid.ny() > detail::kMonolithicMaxNy) throw;
            detail::KktSolution k = detail::kkt_follower_solve(cfg_, base_, seed0_);
            return finish(std::move(k.follower), -1, {k.residual});
        }
    }

private:
    Equilibrium conjugate_gradients() const {
        const auto& opt = cfg_.solver;
        const Grid& g = cfg_.grid;
        Trace rhs = follower_of(sweep(state(Trace(g))));
        Trace x(g);
        x.restrict_to(cfg_.mask2());
        const double bnorm = rhs.norm();
        std::vector<double> history;
        if (bnorm == 0.0) return finish(std::move(x), 0, {0.0});
        Trace r = rhs;
        Trace d = r;
        double rr = r.inner(r);
        for (int it = 1; it <= opt.max_iters; ++it) {
            const Trace hd = apply_operator(d);
            const double dhd = d.inner(hd);
            if (!(dhd > 0.0)) {
                throw ConvergenceError("conjugate gradients lost positive definiteness", history);
            }
            const double step = rr / dhd;
            x.axpy(step, d);
            r.axpy(-step, hd);
            const double rr_new = r.inner(r);
            history.push_back(std::sqrt(rr_new) / bnorm);
            if (history.back() <= opt.tol) return finish(std::move(x), it, std::move(history));
            d *= rr_new / rr;
            d += r;
            rr = rr_new;
        }
        throw ConvergenceError(
            fmt::format("follower CG did not reach {:g} in {} iterations (last {:.3g})", opt.tol,
                        opt.max_iters, history.back()),
            history);
    }

    Equilibrium picard() const {
        const auto& opt = cfg_.solver;
        const Grid& g = cfg_.grid;
        Trace z(g);
        z.restrict_to(cfg_.mask2());
        double theta = opt.relaxation;
        double previous = std::numeric_limits<double>::infinity();
        double scale = 0.0;
        std::vector<double> history;
        for (int it = 1; it <= opt.max_iters; ++it) {
            Trace next = follower_of(sweep(state(z)));
            next *= theta;
            next.axpy(1.0 - theta, z);
            Trace step = next;
            step -= z;
            const double diff = step.norm();
            if (it == 1) {
                scale = next.norm();
                if (scale == 0.0) return finish(std::move(next), it, {0.0});
            }
            history.push_back(diff / scale);
            z = std::move(next);
            if (diff <= opt.tol * scale) return finish(std::move(z), it, std::move(history));
            if (diff > 1e8 * scale) {
                throw ConvergenceError(
                    fmt::format("follower Picard iteration diverged at iteration {} (theta = {})", it, theta),
                    history);
            }
            if (diff > previous) theta = std::max(0.5 * theta, opt.relaxation_floor);
            previous = diff;
        }
        throw ConvergenceError(
            fmt::format("follower Picard iteration did not reach {:g} in {} iterations (last {:.3g})",
                        opt.tol, opt.max_iters, history.back()),
            history);
    }

    const FollowerConfig& cfg_;
    Trace base_;
    std::optional<Field> seed0_;
};

NashSolution nash_solve(const Trace& w1, const FollowerConfig& cfg, bool with_target) {
    cfg.validate();
    require_masked(w1, cfg.mask1(), "leader control w1");
    if (w1.nt() != cfg.grid.nt()) throw ShapeError("leader control does not match the time grid");
    std::optional<Field> seed0;
    if (with_target && cfg.u_tilde2) seed0 = -1.0 * quadrature_weighted(*cfg.u_tilde2);
    Trace base = w1;
    base.restrict_to(cfg.mask1());
    const FollowerEquation eq(cfg, std::move(base), std::move(seed0));
    Equilibrium e = eq.solve();
    NashSolution sol{std::move(e.state), e.sweep.adjoint_field(), std::move(e.follower),
                     e.sweep.boundary_derivative(), e.iterations, std::move(e.history)};
    return sol;
}

}  // namespace

Trace leader_trace(const FollowerConfig& cfg, Trace w1) {
    w1.restrict_to(cfg.mask1());
    return w1;
}

NashSolution solve_nash_system(const Trace& w1, const FollowerConfig& cfg) { return nash_solve(w1, cfg, true); }

NashSolution solve_free_part(const FollowerConfig& cfg) { return nash_solve(Trace(cfg.grid), cfg, true); }

NashSolution solve_leader_part(const Trace& w1, const FollowerConfig& cfg) { return nash_solve(w1, cfg, false); }

EulerLagrangeResidual euler_lagrange_residual(const NashSolution& sol, const Trace& w1,
                                              const FollowerConfig& cfg, const Trace& what2) {
    const Grid& g = cfg.grid;
    g.require_same(sol.u.grid(), "Nash solution");
    require_masked(what2, cfg.mask2(), "follower variation");
    require_masked(w1, cfg.mask1(), "leader control w1");
    for (int n = 0; n <= g.nt(); ++n) {
        const double expected = w1[n] + sol.w2[n];
        if (std::abs(sol.u(0, n) - expected) > 1e-12 * std::max(1.0, std::abs(expected))) {
            throw PreconditionError("Nash solution was not computed for this leader control");
        }
    }
    Field misfit = sol.u;
    if (cfg.u_tilde2) misfit -= *cfg.u_tilde2;
    const Field uhat = forward_from_trace(g, what2);
    EulerLagrangeResidual r;
    r.value = misfit.integral_product(uhat) + cfg.sigma * sol.w2.inner(what2);
    r.scale = std::sqrt(misfit.integral_product(misfit) * uhat.integral_product(uhat)) +
              cfg.sigma * sol.w2.norm() * what2.norm();
    return r;
}

double cost_J2(const Field& u, const Trace& w2, const FollowerConfig& cfg) {
    cfg.grid.require_same(u.grid(), "cost_J2 state");
    Field misfit = u;
    if (cfg.u_tilde2) misfit -= *cfg.u_tilde2;
    Trace w = w2;
    w.restrict_to(cfg.mask2());
    return 0.5 * misfit.integral_product(misfit) + 0.5 * cfg.sigma * w.inner(w);
}

double cost_J(const Trace& w1) { return 0.5 * w1.inner(w1); }

ControlImage apply_A(const Trace& w1, const FollowerConfig& cfg, double delta) {
    if (!(delta >= 0.0)) throw ConfigError("delta must be nonnegative");
    const NashSolution part = solve_leader_part(w1, cfg);
    FinalState fs = final_state(part.u);
    ControlImage img{std::move(fs.velocity), std::move(fs.value)};
    img.velocity_part.axpy(delta, img.value_part);
    img.value_part *= -1.0;
    return img;
}

AdjointPair apply_A_star(const SpatialProfile& f0, const SpatialProfile& f1, const FollowerConfig& cfg,
                         double delta) {
    if (!(delta >= 0.0)) throw ConfigError("delta must be nonnegative");
    cfg.validate();
    const Grid& g = cfg.grid;
    const SpatialProfile ref = SpatialProfile::at_final_time(g);
    ref.require_compatible(f0);
    ref.require_compatible(f1);
    double f0_max = 0.0;
    for (double v : f0.values()) f0_max = std::max(f0_max, std::abs(v));
    if (!f0.endpoints_zero(1e-12 * std::max(1.0, f0_max))) {
        throw PreconditionError("f0 plays the H^1_0 role and must vanish at both endpoints");
    }
    const int ny = g.ny();
    const double h = ref.h();
    std::vector<double> value_coef(ny + 1, 0.0), velocity_coef(ny + 1, 0.0);
    for (int j = 0; j <= ny; ++j) {
        const double w = (j == 0 || j == ny) ? 0.5 : 1.0;
        const bool interior = j > 0 && j < ny;
        velocity_coef[j] = interior ? h * f0[j] : 0.0;
        value_coef[j] = (interior ? delta * h * f0[j] : 0.0) - w * h * f1[j];
    }
    const FollowerEquation eq(cfg, Trace(g), final_state_seed(g, value_coef, velocity_coef));
    Equilibrium e = eq.solve();
    AdjointPair pair{e.sweep.adjoint_field(), std::move(e.state), e.sweep.boundary_derivative(), Trace(g),
                     e.iterations, std::move(e.history)};
    for (int j = 1; j < ny; ++j) pair.phi(j, g.nt()) = f0[j];
    pair.leader_trace = pair.phi_x;
    pair.leader_trace.restrict_to(cfg.mask1());
    return pair;
}

double control_pairing(const ControlImage& a, const SpatialProfile& f0, const SpatialProfile& f1) {
    return duality_pairing(a.velocity_part, f0) + l2_inner(a.value_part, f1);
}

}  // namespace hcw
