#pragma once

#include <array>
#include <optional>
#include <vector>

#include "hcw/grid.hpp"

namespace hcw {

// The wave equation u'' - u_xx = S on the moving interval (0, 1 + k t) is solved on the
// reference cylinder through y = x / alpha(t). With v(y,t) = u(x,t) the chain rule gives
//
//   v_tt - (2ky/alpha) v_yt - ((1 - k^2 y^2)/alpha^2) v_yy + (2k^2 y/alpha^2) v_y = S,
//
// discretized by a three-level centered scheme: v_yy explicit at the center level, the
// mixed term as a centered cross stencil (a tridiagonal solve per step), and a Taylor
// start built from the initial velocity. For k = 0 the scheme is the classical leapfrog.
//
// The whole space-time scheme is one block lower-triangular system E v = r; each time level
// has a tridiagonal diagonal block and at most two coupling blocks to earlier levels.
// Stepping is block forward substitution, and the exact transpose E^T used by the discrete
// adjoints is block back substitution over the same blocks.

enum class Direction { forward, backward };

/// Five-point band per row (offsets -2..2).
using BandRow = std::array<double, 5>;
using Band = std::vector<BandRow>;

/// Coefficients of the rows that determine one time level.
struct LevelBlocks {
    int level = 0;
    int prev1 = -1;  ///< level coupled through `coupling1` (-1 when absent)
    int prev2 = -1;
    Band diag;       ///< tridiagonal (offsets -1..1 only)
    Band coupling1;
    Band coupling2;
};

class SpaceTimeOperator {
public:
    SpaceTimeOperator(const Grid& grid, Direction direction);

    const Grid& grid() const { return grid_; }
    Direction direction() const { return direction_; }
    /// +1 forward, -1 backward.
    int sign() const { return direction_ == Direction::forward ? 1 : -1; }
    /// Time level determined at substitution step m (m = 0 is the initial/final data level).
    int level_of_step(int m) const { return direction_ == Direction::forward ? m : grid_.nt() - m; }
    /// Center of the difference equation solved at step m >= 1.
    int center_of_step(int m) const { return level_of_step(m) - sign(); }

    LevelBlocks blocks(int m) const;

private:
    Grid grid_;
    Direction direction_;
};

/// Initial (forward) or final (backward) data in physical terms: u and u_t.
struct WaveData {
    std::optional<SpatialProfile> value;
    std::optional<SpatialProfile> velocity;
};

struct WaveProblem {
    Direction direction = Direction::forward;
    std::optional<Trace> bc0;      ///< Dirichlet values at x = 0 (zero when absent)
    std::optional<Trace> bc1;      ///< Dirichlet values at x = alpha(t) (zero when absent)
    std::optional<Field> source;   ///< right-hand side S (zero when absent)
    WaveData data;
};

/// External right-hand side r of E v = r for a problem.
std::vector<double> assemble_rhs(const SpaceTimeOperator& op, const WaveProblem& prob);

/// Block forward substitution. Throws InstabilityError at the first non-finite level.
Field substitute(const SpaceTimeOperator& op, const std::vector<double>& rhs);

Field solve_forward(const Grid& grid, const WaveProblem& prob);
/// Solves from the final data at t = T down to t = 0 with the same difference equations.
Field solve_backward(const Grid& grid, const WaveProblem& prob);
/// Dispatches on prob.direction.
Field solve(const Grid& grid, const WaveProblem& prob);

/// Result of applying E^{-T} to a seed: gradients of <seed, v> with respect to the inputs of
/// a forward solve.
struct AdjointSweep {
    Field multipliers;
    Trace grad_bc0;
    Trace grad_bc1;
    Field grad_source;

    /// grad_source divided by the space-time quadrature weights at interior nodes: the
    /// discrete adjoint state. It approximates the solution of the backward wave equation
    /// driven by the seed density.
    Field adjoint_field() const;
    /// grad_bc0 divided by the boundary quadrature weights: the discrete x-derivative of the
    /// adjoint state at x = 0.
    Trace boundary_derivative() const;
};

/// Exact transpose of the forward solve: solves E^T lambda = seed by block back substitution.
AdjointSweep adjoint_sweep(const Grid& grid, const Field& seed);

/// u_x at x = 0 (left) or x = alpha(t) (right), with the one-sided three-point difference
/// v_y / alpha(t).
Trace trace_normal_derivative(const Field& v, Side side);

/// Physical value and velocity u_t = v_t - (k y / alpha) v_y at the final level.
struct FinalState {
    SpatialProfile value;
    SpatialProfile velocity;
};

FinalState final_state(const Field& v);
/// Seed R with <R, v> = sum_j value_coef[j] u(T)_j + sum_j velocity_coef[j] u_t(T)_j.
Field final_state_seed(const Grid& grid, const std::vector<double>& value_coef,
                       const std::vector<double>& velocity_coef);

/// (1/2) int (u_t^2 + u_x^2) dx at an interior level, centered time differences.
double physical_energy(const Field& v, int n);

}  // namespace hcw
