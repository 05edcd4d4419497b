#pragma once

#include <optional>
#include <vector>

#include "hcw/geometry.hpp"
#include "hcw/grid.hpp"
#include "hcw/wave_core.hpp"

namespace hcw {

// Sign convention. Boundary derivatives in this module are x-derivatives at x = 0 of the
// discrete adjoint states. With that convention the follower of the Nash equilibrium is
// w2 = -(1/sigma) p_x on Sigma_2, the adjoint pair couples through psi = -(1/sigma) phi_x on
// Sigma_2, and A* f = +phi_x on Sigma_1. (Read p_x as the outward normal derivative at x = 0
// and the usual textbook forms with the opposite sign are recovered.)

enum class FollowerMethod {
    krylov,  ///< conjugate gradients on the reduced follower equation
    picard,  ///< relaxed fixed-point iteration on the follower trace
};

const char* to_string(FollowerMethod m);
FollowerMethod follower_method_from_string(const std::string& name);

struct FollowerSolverOptions {
    FollowerMethod method = FollowerMethod::krylov;
    int max_iters = 500;
    /// Relative tolerance: CG residual, or successive Picard traces relative to the first.
    double tol = 1e-12;
    /// Picard relaxation theta; halved whenever the update grows, down to relaxation_floor.
    double relaxation = 1.0;
    double relaxation_floor = 0.125;
    /// Retry with the monolithic direct solve (ny <= 64) when the iteration fails.
    bool monolithic_fallback = true;
};

struct FollowerConfig {
    explicit FollowerConfig(const Grid& grid);

    Grid grid;
    double sigma = 1.0;
    /// Desired trajectory of the follower; zero when absent.
    std::optional<Field> u_tilde2;
    SigmaPartition partition;
    FollowerSolverOptions solver;

    void validate() const;
    const std::vector<bool>& mask1() const { return partition.mask1; }
    const std::vector<bool>& mask2() const { return partition.mask2; }
};

/// State/adjoint pair of the follower's optimality system for a given leader.
struct NashSolution {
    Field u;
    Field p;
    Trace w2;
    Trace p_x;  ///< discrete x-derivative of p at x = 0
    int iterations = 0;
    std::vector<double> residual_history;
};

/// (phi, psi) for final data (f0, f1) and the leader trace A* f.
struct AdjointPair {
    Field phi;
    Field psi;
    Trace phi_x;
    Trace leader_trace;  ///< phi_x restricted to Sigma_1
    int iterations = 0;
    std::vector<double> residual_history;
};

/// Image of a leader control under A: (g'(T) + delta g(T), -g(T)).
struct ControlImage {
    SpatialProfile velocity_part;  ///< H^{-1} role
    SpatialProfile value_part;     ///< L^2 role
};

/// Masks w1 to Sigma_1 (convenience for building leader traces).
Trace leader_trace(const FollowerConfig& cfg, Trace w1);

NashSolution solve_nash_system(const Trace& w1, const FollowerConfig& cfg);
/// The w1-independent pair (u0, p0): Nash system with w1 = 0.
NashSolution solve_free_part(const FollowerConfig& cfg);
/// The pair (g, q): Nash system for w1 with the desired trajectory set to zero.
NashSolution solve_leader_part(const Trace& w1, const FollowerConfig& cfg);

struct EulerLagrangeResidual {
    double value = 0.0;
    /// ||u - u_tilde2|| ||uhat|| + sigma ||w2|| ||what2||, the natural size of `value`
    double scale = 0.0;
};

/// int int (u - u_tilde2) uhat dx dt + sigma int w2 what2 dSigma, where uhat solves the state
/// equation with boundary values what2 on Sigma_2 and zero elsewhere.
/// w1 must be the leader used to produce sol; it is checked against the boundary values of sol.u.
EulerLagrangeResidual euler_lagrange_residual(const NashSolution& sol, const Trace& w1,
                                              const FollowerConfig& cfg, const Trace& what2);

double cost_J2(const Field& u, const Trace& w2, const FollowerConfig& cfg);
double cost_J(const Trace& w1);

ControlImage apply_A(const Trace& w1, const FollowerConfig& cfg, double delta);
/// Exact adjoint of apply_A with respect to the H^{-1} x L^2 / H^1_0 x L^2 pairing and the
/// trapezoid inner product on Sigma_1.
AdjointPair apply_A_star(const SpatialProfile& f0, const SpatialProfile& f1, const FollowerConfig& cfg,
                         double delta);

/// <<A w, f>> = <comp1, f0> + (comp2, f1).
double control_pairing(const ControlImage& a, const SpatialProfile& f0, const SpatialProfile& f1);

/// Space-time field multiplied by the physical quadrature weights.
Field quadrature_weighted(const Field& f);

}  // namespace hcw
