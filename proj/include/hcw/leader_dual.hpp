#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hcw/coupled.hpp"
#include "hcw/grid.hpp"

namespace hcw {

/// Ball targets at t = T: u(T) in B_{L2}(u_target0, rho0), u'(T) in B_{H^-1}(u_target1, rho1).
struct TargetSpec {
    SpatialProfile u_target0;
    SpatialProfile u_target1;
    double rho0 = 0.0;
    double rho1 = 0.0;

    void validate(const Grid& grid) const;
};

/// (f0, f1) in H^1_0 x L^2 at t = T.
struct DualPoint {
    SpatialProfile f0;
    SpatialProfile f1;

    static DualPoint zero(const Grid& grid);
    void validate() const;
};

struct TargetDistance {
    double dist_L2 = 0.0;
    double dist_Hm1 = 0.0;
    bool reached0 = false;
    bool reached1 = false;
};

/// Relative slack of the closed-ball test: dist <= rho (1 + kBallSlack).
inline constexpr double kBallSlack = 1e-9;

TargetDistance check_target_reached(const SpatialProfile& u_T, const SpatialProfile& ut_T, const TargetSpec& targets);

struct DualHistoryEntry {
    int iter = 0;
    double dual_value = 0.0;
    /// Variational-inequality value at the proximal-gradient point (Gram estimate), same unit as scale.
    double vi_residual = 0.0;
    double dist_L2 = 0.0;
    double dist_Hm1 = 0.0;
};

struct DualReport {
    double dual_value = 0.0;
    double primal_J = 0.0;
    /// |J(w1*) + D(f*)|; NaN when w1* misses a ball.
    double gap = 0.0;
    double vi_residual = 0.0;
    /// sqrt(|c0|_{H^-1}^2 + |c1|_{L2}^2): size of the data term, the unit of vi_residual.
    double scale = 0.0;
    double dist_L2 = 0.0;
    double dist_Hm1 = 0.0;
    bool reached0 = false;
    bool reached1 = false;
    int iterations = 0;
    int newton_steps = 0;
    int delta_rounds = 0;
    bool certified = false;
    std::vector<DualHistoryEntry> history;
    std::vector<std::string> warnings;
};

struct DualOptions {
    int max_iters = 20000;
    /// Certificate threshold: vi_residual >= -tol_vi * scale.
    double tol_vi = 1e-5;
    /// Proximal-gradient stationarity (relative to scale) at which the Newton polish starts.
    double stationarity_tol = 1e-7;
    bool newton_polish = true;
    int vi_samples = 100;
    std::uint64_t seed = 1;
    /// delta > 0: outer refreshes of g(T) in the data term.
    int delta_rounds = 30;
    double delta_tol = 1e-10;
};

struct DualResult {
    DualPoint f_star;
    Trace w1_star;
    DualReport report;
};

struct ViResult {
    double value = 0.0;  ///< min over samples of LHS / |fhat - f|
    double scale = 0.0;
};

/// Dual problem for fixed (targets, follower configuration, delta). Caches the free part and,
/// once needed, the Gram matrix of A* over the nodal basis of (f0, f1).
class LeaderDual {
public:
    LeaderDual(TargetSpec targets, FollowerConfig cfg, double delta = 0.0);

    const TargetSpec& targets() const { return targets_; }
    const FollowerConfig& config() const { return cfg_; }
    double delta() const { return delta_; }
    const FinalState& free_final_state() const { return free_; }

    /// Data terms c0 = u1 - u0'(T) + delta g(T), c1 = u0 - u0(T) for the current g(T).
    const SpatialProfile& c0() const { return c0_; }
    const SpatialProfile& c1() const { return c1_; }
    /// Refreshes g(T) in c0 from a leader control (no-op for delta = 0).
    void refresh_data(const Trace& w1);
    double scale() const;

    double value(const DualPoint& f) const;
    DualPoint subgradient(const DualPoint& f) const;
    /// Final state of the full system driven by w1.
    FinalState final_state_for(const Trace& w1) const;
    ViResult vi_residual(const DualPoint& f, int samples, std::uint64_t seed) const;
    double gap(const Trace& w1, const DualPoint& f) const;

    DualResult minimize(const DualOptions& opt = {});

    // Coordinates: interior values of f0, then every value of f1.
    int dimension() const { return n0_ + n1_; }
    Eigen::VectorXd to_coords(const DualPoint& f) const;
    DualPoint from_coords(const Eigen::VectorXd& x) const;
    /// Columns A* e_i on Sigma_1; assembled on first use.
    const Eigen::MatrixXd& leader_basis();
    const Eigen::MatrixXd& gram();

private:
    double smooth_part(const Trace& leader, const DualPoint& f) const;
    double rho_part(const DualPoint& f) const;
    void assemble();
    DualResult minimize_once(const DualOptions& opt, const Eigen::VectorXd& start, DualReport& report);

    TargetSpec targets_;
    FollowerConfig cfg_;
    double delta_;
    FinalState free_;
    SpatialProfile c0_;
    SpatialProfile c1_;
    int n0_;
    int n1_;
    std::optional<Eigen::MatrixXd> basis_;
    std::optional<Eigen::MatrixXd> gram_;
};

double dual_functional(const DualPoint& f, const TargetSpec& targets, const FollowerConfig& cfg, double delta = 0.0);
/// Riesz representative in H^1_0 x L^2 of a subgradient.
DualPoint dual_subgradient(const DualPoint& f, const TargetSpec& targets, const FollowerConfig& cfg,
                           double delta = 0.0);
DualResult minimize_dual(const TargetSpec& targets, const FollowerConfig& cfg, double delta = 0.0,
                         const DualOptions& opt = {});
ViResult vi_residual(const DualPoint& f, const TargetSpec& targets, const FollowerConfig& cfg, int sample_count,
                     std::uint64_t seed = 1, double delta = 0.0);
/// Throws PreconditionError when w1 misses a ball.
double duality_gap(const Trace& w1, const DualPoint& f, const TargetSpec& targets, const FollowerConfig& cfg,
                   double delta = 0.0);

/// Targets equal to the final state of the Nash system driven by w1_ref, radii radius_fraction
/// times the norms of that state (L2 for u(T), H^-1 for u'(T)).
TargetSpec manufactured_targets(const Trace& w1_ref, const FollowerConfig& cfg, double radius_fraction);
/// Targets equal to the free final state (u0(T), u0'(T)) with the given radii.
TargetSpec free_state_targets(const FollowerConfig& cfg, double rho0, double rho1);
/// sin^3(pi t / T) on Sigma_1.
Trace smooth_reference_control(const FollowerConfig& cfg, double amplitude = 1.0);

std::string dual_report_json(const DualReport& report);
void write_dual_history_csv(std::ostream& os, const DualReport& report, const CsvPreamble& preamble = {});

}  // namespace hcw
