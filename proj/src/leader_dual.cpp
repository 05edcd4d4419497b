#include "hcw/leader_dual.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/core.h>
#include <json.hpp>

#include "hcw/errors.hpp"
#include "hcw/verify.hpp"

namespace hcw {

void TargetSpec::validate(const Grid& grid) const {
    const SpatialProfile ref = SpatialProfile::at_final_time(grid);
    ref.require_compatible(u_target0);
    ref.require_compatible(u_target1);
    if (!(rho0 > 0.0) || !std::isfinite(rho0)) throw ConfigError(fmt::format("rho0 must be positive, got {}", rho0));
    if (!(rho1 > 0.0) || !std::isfinite(rho1)) throw ConfigError(fmt::format("rho1 must be positive, got {}", rho1));
}

DualPoint DualPoint::zero(const Grid& grid) {
    return {SpatialProfile::at_final_time(grid), SpatialProfile::at_final_time(grid)};
}

void DualPoint::validate() const {
    f0.require_compatible(f1);
    if (!f0.endpoints_zero()) throw PreconditionError("f0 must vanish at both endpoints");
}

TargetDistance check_target_reached(const SpatialProfile& u_T, const SpatialProfile& ut_T, const TargetSpec& targets) {
    TargetDistance d;
    d.dist_L2 = l2_norm_physical(u_T - targets.u_target0);
    d.dist_Hm1 = hminus1_norm_physical(ut_T - targets.u_target1);
    d.reached0 = d.dist_L2 <= targets.rho0 * (1.0 + kBallSlack);
    d.reached1 = d.dist_Hm1 <= targets.rho1 * (1.0 + kBallSlack);
    return d;
}

namespace {

FinalState compute_free_state(const FollowerConfig& cfg) { return final_state(solve_free_part(cfg).u); }

double m_norm(const DualPoint& f) { return std::hypot(h10_norm_physical(f.f0), l2_norm_physical(f.f1)); }

DualPoint combine(const DualPoint& a, double s, const DualPoint& b) {
    DualPoint out = a;
    out.f0.axpy(s, b.f0);
    out.f1.axpy(s, b.f1);
    return out;
}

// Block norm shrinkage in the (H^1_0, L^2) metric.
DualPoint shrink(DualPoint y, double tau, double rho0, double rho1) {
    const double n0 = h10_norm_physical(y.f0);
    const double n1 = l2_norm_physical(y.f1);
    y.f0 *= n0 > 0.0 ? std::max(0.0, 1.0 - tau * rho1 / n0) : 0.0;
    y.f1 *= n1 > 0.0 ? std::max(0.0, 1.0 - tau * rho0 / n1) : 0.0;
    return y;
}

}  // namespace

LeaderDual::LeaderDual(TargetSpec targets, FollowerConfig cfg, double delta)
    : targets_(std::move(targets)),
      cfg_(std::move(cfg)),
      delta_(delta),
      free_(compute_free_state(cfg_)),
      c0_(targets_.u_target1 - free_.velocity),
      c1_(targets_.u_target0 - free_.value),
      n0_(cfg_.grid.ny() - 1),
      n1_(cfg_.grid.ny() + 1) {
    targets_.validate(cfg_.grid);
    if (!(delta_ >= 0.0)) throw ConfigError("delta must be nonnegative");
    // c0 pairs with H^1_0 functions only through interior nodes
    c0_[0] = 0.0;
    c0_[cfg_.grid.ny()] = 0.0;
}

void LeaderDual::refresh_data(const Trace& w1) {
    if (delta_ == 0.0) return;
    const ControlImage img = apply_A(w1, cfg_, 0.0);  // value_part = -g(T)
    c0_ = targets_.u_target1 - free_.velocity;
    c0_.axpy(-delta_, img.value_part);
    c0_[0] = 0.0;
    c0_[cfg_.grid.ny()] = 0.0;
}

double LeaderDual::scale() const { return std::hypot(hminus1_norm_physical(c0_), l2_norm_physical(c1_)); }

double LeaderDual::rho_part(const DualPoint& f) const {
    return targets_.rho1 * h10_norm_physical(f.f0) + targets_.rho0 * l2_norm_physical(f.f1);
}

double LeaderDual::smooth_part(const Trace& leader, const DualPoint& f) const {
    return 0.5 * leader.inner(leader) + l2_inner(c1_, f.f1) - duality_pairing(c0_, f.f0);
}

double LeaderDual::value(const DualPoint& f) const {
    f.validate();
    const AdjointPair pair = apply_A_star(f.f0, f.f1, cfg_, delta_);
    return smooth_part(pair.leader_trace, f) + rho_part(f);
}

DualPoint LeaderDual::subgradient(const DualPoint& f) const {
    f.validate();
    const AdjointPair pair = apply_A_star(f.f0, f.f1, cfg_, delta_);
    const ControlImage img = apply_A(pair.leader_trace, cfg_, delta_);
    DualPoint g{poisson_solve(img.velocity_part - c0_), img.value_part + c1_};
    const double n0 = h10_norm_physical(f.f0);
    const double n1 = l2_norm_physical(f.f1);
    if (n0 > 0.0) g.f0.axpy(targets_.rho1 / n0, f.f0);
    if (n1 > 0.0) g.f1.axpy(targets_.rho0 / n1, f.f1);
    return g;
}

FinalState LeaderDual::final_state_for(const Trace& w1) const { return final_state(solve_nash_system(w1, cfg_).u); }

ViResult LeaderDual::vi_residual(const DualPoint& f, int samples, std::uint64_t seed) const {
    f.validate();
    const Grid& g = cfg_.grid;
    const AdjointPair pair = apply_A_star(f.f0, f.f1, cfg_, delta_);
    const FinalState fs = final_state_for(pair.leader_trace);
    SpatialProfile e0 = fs.velocity - targets_.u_target1;
    const SpatialProfile e1 = fs.value - targets_.u_target0;
    const double base_rho = rho_part(f);

    ViResult out{std::numeric_limits<double>::infinity(), scale()};
    const double fn = m_norm(f);
    // a sample within rounding distance of f only measures rounding noise
    const double min_step = 1e-8 * fn;
    auto sample = [&](const DualPoint& fhat) {
        const DualPoint d = combine(fhat, -1.0, f);
        const double dn = m_norm(d);
        if (!(dn > min_step)) return;
        const double lhs = duality_pairing(e0, d.f0) - l2_inner(e1, d.f1) + rho_part(fhat) - base_rho;
        out.value = std::min(out.value, lhs / dn);
    };

    for (double c : {0.0, 0.5, 1.5, 2.0}) {
        if (fn > 0.0) sample(DualPoint{c * f.f0, c * f.f1});
    }
    // proximal-gradient points
    e0[0] = 0.0;
    e0[g.ny()] = 0.0;
    const DualPoint grad{poisson_solve(e0), -1.0 * e1};
    const double gn = m_norm(grad);
    if (gn > 0.0) {
        for (double s : {1e-3, 1e-1, 1.0}) {
            const double tau = (fn > 0.0 ? fn : 1.0) / gn * s;
            sample(shrink(combine(f, -tau, grad), tau, targets_.rho0, targets_.rho1));
        }
    }
    UniformStream rng(seed);
    const double step = fn > 0.0 ? 1e-2 * fn : 1.0;
    const int random_samples = std::max(0, samples - 7);
    for (int i = 0; i < random_samples; ++i) {
        DualPoint d{random_h10_profile(g, rng), random_l2_profile(g, rng)};
        const double dn = m_norm(d);
        sample(combine(f, step / dn, d));
    }
    if (!std::isfinite(out.value)) out.value = 0.0;
    return out;
}

double LeaderDual::gap(const Trace& w1, const DualPoint& f) const {
    const FinalState fs = final_state_for(w1);
    const TargetDistance d = check_target_reached(fs.value, fs.velocity, targets_);
    if (!d.reached0 || !d.reached1) {
        throw PreconditionError(fmt::format(
            "duality gap undefined: leader control misses the targets (L2 {:.6g} vs {:.6g}, H^-1 {:.6g} vs {:.6g})",
            d.dist_L2, targets_.rho0, d.dist_Hm1, targets_.rho1));
    }
    return std::abs(cost_J(w1) + value(f));
}

Eigen::VectorXd LeaderDual::to_coords(const DualPoint& f) const {
    Eigen::VectorXd x(dimension());
    for (int i = 0; i < n0_; ++i) x[i] = f.f0[i + 1];
    for (int j = 0; j < n1_; ++j) x[n0_ + j] = f.f1[j];
    return x;
}

DualPoint LeaderDual::from_coords(const Eigen::VectorXd& x) const {
    DualPoint f = DualPoint::zero(cfg_.grid);
    for (int i = 0; i < n0_; ++i) f.f0[i + 1] = x[i];
    for (int j = 0; j < n1_; ++j) f.f1[j] = x[n0_ + j];
    return f;
}

void LeaderDual::assemble() {
    const Grid& g = cfg_.grid;
    const int nd = dimension();
    Eigen::MatrixXd B(g.nt() + 1, nd);
    for (int i = 0; i < nd; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(nd);
        e[i] = 1.0;
        const DualPoint f = from_coords(e);
        const AdjointPair pair = apply_A_star(f.f0, f.f1, cfg_, delta_);
        for (int n = 0; n <= g.nt(); ++n) B(n, i) = pair.leader_trace[n];
    }
    Eigen::VectorXd w(g.nt() + 1);
    for (int n = 0; n <= g.nt(); ++n) w[n] = g.time_weight(n);
    Eigen::MatrixXd Q = B.transpose() * w.asDiagonal() * B;
    gram_ = 0.5 * (Q + Q.transpose());
    basis_ = std::move(B);
}

const Eigen::MatrixXd& LeaderDual::leader_basis() {
    if (!basis_) assemble();
    return *basis_;
}

const Eigen::MatrixXd& LeaderDual::gram() {
    if (!gram_) assemble();
    return *gram_;
}

namespace {

// The dual in coordinates: S(x) = x'Qx/2 + l'x, R(x) = rho1 |x0|_M0 + rho0 |x1|_M1.
struct CoordinateDual {
    const Eigen::MatrixXd& Q;
    Eigen::VectorXd l;
    Eigen::MatrixXd M;  // block diagonal metric
    Eigen::LLT<Eigen::MatrixXd> M_llt;
    int n0;
    int n1;
    double rho0;
    double rho1;

    auto x0(const Eigen::VectorXd& x) const { return x.head(n0); }
    auto x1(const Eigen::VectorXd& x) const { return x.tail(n1); }
    double norm0(const Eigen::VectorXd& x) const {
        return std::sqrt(std::max(0.0, x0(x).dot(M.topLeftCorner(n0, n0) * x0(x))));
    }
    double norm1(const Eigen::VectorXd& x) const {
        return std::sqrt(std::max(0.0, x1(x).dot(M.bottomRightCorner(n1, n1) * x1(x))));
    }
    double smooth(const Eigen::VectorXd& x) const { return 0.5 * x.dot(Q * x) + l.dot(x); }
    Eigen::VectorXd grad(const Eigen::VectorXd& x) const { return Q * x + l; }
    double rho_part(const Eigen::VectorXd& x) const { return rho1 * norm0(x) + rho0 * norm1(x); }
    double value(const Eigen::VectorXd& x) const { return smooth(x) + rho_part(x); }
    // value(x + d) - value(x) without the cancellation of two large values
    double change(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& d) const {
        return g.dot(d) + 0.5 * d.dot(Q * d) + rho_part(x + d) - rho_part(x);
    }
    double m_norm(const Eigen::VectorXd& v) const { return std::sqrt(std::max(0.0, v.dot(M * v))); }
    double dual_m_norm(const Eigen::VectorXd& g) const { return std::sqrt(std::max(0.0, g.dot(M_llt.solve(g)))); }

    Eigen::VectorXd prox(Eigen::VectorXd y, double tau) const {
        const double a = norm0(y);
        const double b = norm1(y);
        y.head(n0) *= a > 0.0 ? std::max(0.0, 1.0 - tau * rho1 / a) : 0.0;
        y.tail(n1) *= b > 0.0 ? std::max(0.0, 1.0 - tau * rho0 / b) : 0.0;
        return y;
    }
    Eigen::VectorXd prox_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double tau) const {
        return prox(x - tau * M_llt.solve(g), tau);
    }
    // Normalized VI value at the proximal-gradient point and the stationarity measure.
    std::pair<double, double> certificate(const Eigen::VectorXd& x, double tau) const {
        const Eigen::VectorXd g = grad(x);
        const Eigen::VectorXd p = prox_grad(x, g, tau);
        const Eigen::VectorXd d = p - x;
        const double dn = m_norm(d);
        if (!(dn > 0.0)) return {0.0, 0.0};
        return {(g.dot(d) + rho_part(p) - rho_part(x)) / dn, dn / tau};
    }
    std::pair<double, double> distances(const Eigen::VectorXd& x) const {
        const Eigen::VectorXd g = grad(x);
        const Eigen::VectorXd g0 = g.head(n0);
        const Eigen::VectorXd g1 = g.tail(n1);
        const Eigen::MatrixXd M0 = M.topLeftCorner(n0, n0);
        const double hm1 = std::sqrt(std::max(0.0, g0.dot(M0.llt().solve(g0))));
        double l2 = 0.0;
        for (int j = 0; j < n1; ++j) l2 += g1[j] * g1[j] / M(n0 + j, n0 + j);
        return {std::sqrt(l2), hm1};
    }
};

}  // namespace

DualResult LeaderDual::minimize_once(const DualOptions& opt, const Eigen::VectorXd& start, DualReport& report) {
    const Grid& g = cfg_.grid;
    const Eigen::MatrixXd& Q = gram();
    const int ny = g.ny();
    const double h = c0_.h();

    CoordinateDual cd{Q, Eigen::VectorXd(dimension()), Eigen::MatrixXd::Zero(dimension(), dimension()), {}, n0_,
                      n1_, targets_.rho0, targets_.rho1};
    for (int i = 0; i < n0_; ++i) {
        cd.l[i] = -h * c0_[i + 1];
        cd.M(i, i) = 2.0 / h;
        if (i + 1 < n0_) cd.M(i, i + 1) = cd.M(i + 1, i) = -1.0 / h;
    }
    for (int j = 0; j <= ny; ++j) {
        const double w = (j == 0 || j == ny) ? 0.5 : 1.0;
        cd.l[n0_ + j] = h * w * c1_[j];
        cd.M(n0_ + j, n0_ + j) = h * w;
    }
    cd.M_llt.compute(cd.M);

    // Lipschitz constant of the smooth gradient in the metric M
    const Eigen::MatrixXd Linv = cd.M_llt.matrixL().solve(Eigen::MatrixXd::Identity(dimension(), dimension()));
    const Eigen::MatrixXd C = Linv * Q * Linv.transpose();
    const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (C + C.transpose()), Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff();
    double tau = lip > 0.0 ? 1.0 / lip : 1.0;
    const double sc = scale();

    report.history.clear();
    Eigen::VectorXd x = start;
    double fx = cd.value(x);
    auto record = [&](int iter) {
        const auto [vi, stat] = cd.certificate(x, tau);
        (void)stat;
        const auto [dl2, dhm1] = cd.distances(x);
        report.history.push_back({iter, fx, vi, dl2, dhm1});
    };
    record(0);

    // plain proximal-gradient step with backtracking; to_change is value(to) - value(from)
    auto descent_step = [&](const Eigen::VectorXd& from, Eigen::VectorXd& to, double& to_change) {
        const Eigen::VectorXd gr = cd.grad(from);
        for (int bt = 0; bt < 60; ++bt) {
            to = cd.prox_grad(from, gr, tau);
            const Eigen::VectorXd d = to - from;
            if (0.5 * d.dot(Q * d) <= 0.5 / tau * d.dot(cd.M * d) * (1.0 + 1e-12)) break;
            tau *= 0.5;
        }
        to_change = cd.change(from, gr, to - from);
    };
    bool stationary = sc == 0.0;
    Eigen::VectorXd y = x;
    double t = 1.0;
    int it = 0;
    for (; it < opt.max_iters && !stationary; ++it) {
        Eigen::VectorXd xn;
        double dy = 0.0;
        descent_step(y, xn, dy);
        double dx = cd.change(x, cd.grad(x), xn - x);
        if (!(dx <= 0.0)) {
            // function-value restart: fall back to a monotone step from x
            t = 1.0;
            descent_step(x, xn, dx);
            if (!(dx <= 0.0)) break;
            y = xn;
        } else {
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = xn + ((t - 1.0) / tn) * (xn - x);
            t = tn;
        }
        x = xn;
        fx += dx;
        record(it + 1);
        stationary = cd.certificate(x, tau).second <= opt.stationarity_tol * sc;
    }

    // Newton polish on the nonzero blocks, only once the first-order phase is close
    if (opt.newton_polish && sc > 0.0 && cd.certificate(x, tau).second <= 1e-3 * sc) {
        for (int step = 0; step < 60; ++step) {
            const bool a0 = cd.norm0(x) > 0.0;
            const bool a1 = cd.norm1(x) > 0.0;
            if (!a0 && !a1) break;
            if (cd.certificate(x, tau).second <= 1e-13 * sc) break;
            Eigen::VectorXd grad = cd.grad(x);
            Eigen::MatrixXd H = Q;
            auto add_block = [&](int off, int n, double rho, double nrm) {
                const Eigen::MatrixXd Mb = cd.M.block(off, off, n, n);
                const Eigen::VectorXd mx = Mb * x.segment(off, n);
                grad.segment(off, n) += rho * mx / nrm;
                H.block(off, off, n, n) += rho * (Mb / nrm - mx * mx.transpose() / (nrm * nrm * nrm));
            };
            if (a0) add_block(0, n0_, targets_.rho1, cd.norm0(x));
            if (a1) add_block(n0_, n1_, targets_.rho0, cd.norm1(x));
            std::vector<int> idx;
            for (int i = 0; i < n0_; ++i) {
                if (a0) idx.push_back(i);
            }
            for (int j = 0; j < n1_; ++j) {
                if (a1) idx.push_back(n0_ + j);
            }
            const int na = static_cast<int>(idx.size());
            double gnorm = 0.0;
            for (int r = 0; r < na; ++r) gnorm = std::max(gnorm, std::abs(grad[idx[r]]));
            if (gnorm == 0.0) break;
            Eigen::MatrixXd Ha(na, na);
            Eigen::VectorXd ga(na);
            for (int r = 0; r < na; ++r) {
                ga[r] = grad[idx[r]];
                for (int c = 0; c < na; ++c) Ha(r, c) = H(idx[r], idx[c]);
            }
            const Eigen::VectorXd pa = Ha.ldlt().solve(-ga);
            if (!pa.allFinite()) break;
            Eigen::VectorXd p = Eigen::VectorXd::Zero(dimension());
            for (int r = 0; r < na; ++r) p[idx[r]] = pa[r];
            double s = 1.0;
            bool accepted = false;
            for (int bt = 0; bt < 40; ++bt, s *= 0.5) {
                const Eigen::VectorXd xn = x + s * p;
                if ((a0 && !(cd.norm0(xn) > 0.0)) || (a1 && !(cd.norm1(xn) > 0.0))) continue;
                const double dv = cd.change(x, cd.grad(x), s * p);
                if (dv <= 0.0) {
                    x = xn;
                    fx += dv;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            ++report.newton_steps;
            record(++it);
        }
    }

    const auto [vi, stat] = cd.certificate(x, tau);
    (void)vi;
    report.iterations = it;
    DualResult res{from_coords(x), Trace(g), DualReport{}};
    Eigen::VectorXd w = leader_basis() * x;
    for (int n = 0; n <= g.nt(); ++n) res.w1_star[n] = w[n];
    res.w1_star.restrict_to(cfg_.mask1());
    if (!(stat <= opt.stationarity_tol * std::max(sc, std::numeric_limits<double>::min())) && sc > 0.0) {
        report.warnings.push_back(
            fmt::format("dual iteration stopped at stationarity {:.3g} (relative), above the requested {:.3g}",
                        stat / sc, opt.stationarity_tol));
    }
    return res;
}

DualResult LeaderDual::minimize(const DualOptions& opt) {
    const AdmissibilityReport adm = check_admissible(cfg_.grid.domain());
    if (!adm.ok) throw DomainError(adm.error);
    DualReport report;
    report.warnings = adm.warnings();
    if (cfg_.partition.mode == PartitionMode::time_split) {
        report.warnings.push_back("time-split partition: density of the reachable set is not established; experimental");
    }

    Eigen::VectorXd x = Eigen::VectorXd::Zero(dimension());
    DualResult res{DualPoint::zero(cfg_.grid), Trace(cfg_.grid), {}};
    const int rounds = delta_ > 0.0 ? std::max(1, opt.delta_rounds) : 1;
    for (int round = 0; round < rounds; ++round) {
        res = minimize_once(opt, x, report);
        x = to_coords(res.f_star);
        report.delta_rounds = round + 1;
        if (delta_ == 0.0) break;
        const SpatialProfile before = c0_;
        refresh_data(res.w1_star);
        const double change = hminus1_norm_physical(c0_ - before);
        if (change <= opt.delta_tol * std::max(scale(), std::numeric_limits<double>::min())) break;
        if (round + 1 == rounds) {
            report.warnings.push_back(fmt::format("delta outer loop stopped after {} rounds (last change {:.3g})",
                                                  rounds, change));
        }
    }

    // certificate through the operator path
    const double sc = scale();
    report.scale = sc;
    const AdjointPair pair = apply_A_star(res.f_star.f0, res.f_star.f1, cfg_, delta_);
    res.w1_star = pair.leader_trace;
    const FinalState fs = final_state_for(res.w1_star);
    const TargetDistance dist = check_target_reached(fs.value, fs.velocity, targets_);
    report.dist_L2 = dist.dist_L2;
    report.dist_Hm1 = dist.dist_Hm1;
    report.reached0 = dist.reached0;
    report.reached1 = dist.reached1;
    report.dual_value = smooth_part(pair.leader_trace, res.f_star) + rho_part(res.f_star);
    report.primal_J = cost_J(res.w1_star);
    report.gap = dist.reached0 && dist.reached1 ? std::abs(report.primal_J + report.dual_value)
                                                : std::numeric_limits<double>::quiet_NaN();
    const ViResult vi = vi_residual(res.f_star, opt.vi_samples, opt.seed);
    report.vi_residual = vi.value;
    report.certified = vi.value >= -opt.tol_vi * sc;
    if (!report.certified) {
        report.warnings.push_back(fmt::format("not_certified: variational inequality residual {:.3g} below -{:.3g}",
                                              vi.value, opt.tol_vi * sc));
    }
    res.report = std::move(report);
    return res;
}

double dual_functional(const DualPoint& f, const TargetSpec& targets, const FollowerConfig& cfg, double delta) {
    return LeaderDual(targets, cfg, delta).value(f);
}

DualPoint dual_subgradient(const DualPoint& f, const TargetSpec& targets, const FollowerConfig& cfg, double delta) {
    return LeaderDual(targets, cfg, delta).subgradient(f);
}

DualResult minimize_dual(const TargetSpec& targets, const FollowerConfig& cfg, double delta, const DualOptions& opt) {
    LeaderDual dual(targets, cfg, delta);
    return dual.minimize(opt);
}

ViResult vi_residual(const DualPoint& f, const TargetSpec& targets, const FollowerConfig& cfg, int sample_count,
                     std::uint64_t seed, double delta) {
    return LeaderDual(targets, cfg, delta).vi_residual(f, sample_count, seed);
}

double duality_gap(const Trace& w1, const DualPoint& f, const TargetSpec& targets, const FollowerConfig& cfg,
                   double delta) {
    return LeaderDual(targets, cfg, delta).gap(w1, f);
}

TargetSpec manufactured_targets(const Trace& w1_ref, const FollowerConfig& cfg, double radius_fraction) {
    if (!(radius_fraction > 0.0)) throw ConfigError("radius fraction must be positive");
    const FinalState fs = final_state(solve_nash_system(w1_ref, cfg).u);
    TargetSpec t{fs.value, fs.velocity, radius_fraction * l2_norm_physical(fs.value),
                 radius_fraction * hminus1_norm_physical(fs.velocity)};
    t.validate(cfg.grid);
    return t;
}

TargetSpec free_state_targets(const FollowerConfig& cfg, double rho0, double rho1) {
    const FinalState fs = final_state(solve_free_part(cfg).u);
    TargetSpec t{fs.value, fs.velocity, rho0, rho1};
    t.validate(cfg.grid);
    return t;
}

Trace smooth_reference_control(const FollowerConfig& cfg, double amplitude) {
    const Grid& g = cfg.grid;
    Trace w(g);
    for (int n = 0; n <= g.nt(); ++n) {
        const double s = std::sin(std::numbers::pi * g.t(n) / g.T());
        w[n] = amplitude * s * s * s;
    }
    return leader_trace(cfg, std::move(w));
}

std::string dual_report_json(const DualReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
    nlohmann::ordered_json j;
    j["dual_value"] = num(r.dual_value);
    j["primal_J"] = num(r.primal_J);
    j["gap"] = num(r.gap);
    j["vi_residual"] = num(r.vi_residual);
    j["scale"] = num(r.scale);
    j["dist_L2"] = num(r.dist_L2);
    j["dist_Hm1"] = num(r.dist_Hm1);
    j["reached"] = {r.reached0, r.reached1};
    j["iterations"] = r.iterations;
    j["newton_steps"] = r.newton_steps;
    j["delta_rounds"] = r.delta_rounds;
    j["certified"] = r.certified;
    j["warnings"] = r.warnings;
    return j.dump(2);
}

void write_dual_history_csv(std::ostream& os, const DualReport& report, const CsvPreamble& preamble) {
    for (const auto& line : preamble) os << "# " << line << '\n';
    os << "iter,dual_value,vi_residual,dist_L2,dist_Hm1\n";
    for (const auto& e : report.history) {
        os << e.iter << ',' << format_exact(e.dual_value) << ',' << format_exact(e.vi_residual) << ','
           << format_exact(e.dist_L2) << ',' << format_exact(e.dist_Hm1) << '\n';
    }
}

}  // namespace hcw
