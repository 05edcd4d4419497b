#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hcw/coupled.hpp"
#include "hcw/geometry.hpp"
#include "hcw/grid.hpp"
#include "hcw/wave_core.hpp"

namespace hcw {

// --- closed forms -------------------------------------------------------------------

/// Fixed interval (0,1), zero data, u(0,t) = b(t), u(1,t) = 0: the method of images gives
/// u(x,t) = sum_m [b(t - x - 2m) - b(t + x - 2 - 2m)] with b = 0 for negative arguments.
/// Every reflection that reaches (x, t) is included.
double dalembert_reference(const std::function<double(double)>& bc0, double x, double t);

// --- monolithic direct solves ---------------------------------------------------------

enum class CoupledSystem { nash, free_part, leader_part, adjoint_pair };

const char* to_string(CoupledSystem s);

struct MonolithicInputs {
    std::optional<Trace> w1;            ///< nash, leader_part (zero when absent)
    std::optional<SpatialProfile> f0;   ///< adjoint_pair
    std::optional<SpatialProfile> f1;   ///< adjoint_pair
    double delta = 0.0;
};

struct MonolithicResult {
    Field state;      ///< u, u0, g or psi
    Field adjoint;    ///< p, p0, q or phi
    Trace follower;   ///< w2, or the boundary values of psi
    Trace boundary_derivative;  ///< adjoint x-derivative at x = 0
    double residual = 0.0;      ///< relative residual of the assembled system
};

/// All unknowns of the chosen coupled system in one sparse system with the stencils of the
/// stepper, factorized once (sparse LU). Ny <= 64; raises ConfigError beyond that or when
/// the factorization fails.
MonolithicResult monolithic_solve(CoupledSystem system, const FollowerConfig& cfg, const MonolithicInputs& in);

// --- transpose check ---------------------------------------------------------------------

struct TransposeCheckOptions {
    int trials = 20;
    std::uint64_t seed = 12345;
    double delta = 0.0;
    /// Negative control: pair A w1 with f using reference-cylinder weights (no Jacobian alpha).
    bool drop_jacobian = false;
};

struct TransposeCheckResult {
    double max_relative_error = 0.0;
    std::vector<double> errors;
};

/// Worst |<<A w1, f>> - int (A* f) w1| / (|A w1| |f| + |A* f| |w1|) over seeded random pairs.
TransposeCheckResult transpose_check(const FollowerConfig& cfg, const TransposeCheckOptions& opt = {});

// --- convergence studies -------------------------------------------------------------------

struct OracleCase {
    std::string name;
    DomainSpec domain;
    /// Problem posed on a given grid.
    std::function<WaveProblem(const Grid&)> problem;
    /// Closed form u(x, t); when empty the error is measured at t = T against a grid
    /// reference_factor times finer than the finest rung.
    std::function<double(double, double)> exact;
    std::vector<int> ladder;
    int reference_factor = 4;
    /// nt of the coarsest rung is chosen by the CFL rule; finer rungs scale it with ny.
    double cfl_safety = kDefaultCflSafety;
    double expected_order = 2.0;
    double order_tolerance = 0.3;
};

struct ConvergenceRow {
    int ny = 0;
    int nt = 0;
    double error = 0.0;
    std::optional<double> order;  ///< log2(e_prev / e) against the previous rung
};

std::vector<ConvergenceRow> convergence_study(const OracleCase& oc);

/// Boundary signal sin^3(pi t) on t < 1 and zero afterwards.
double smooth_pulse(double t);

OracleCase dalembert_case();
OracleCase self_convergence_case(double k = 0.1);
/// u = x t: reproduced exactly by the scheme.
OracleCase linear_case(double k = 0.0);

// --- reports -------------------------------------------------------------------------------

struct CheckResult {
    std::string name;
    std::string metric;  ///< what `value` measures
    double value = 0.0;
    double threshold = 0.0;
    /// true: pass when value <= threshold; false: pass when value >= threshold
    bool upper_bound = true;
    bool passed = false;
    std::string detail;
};

CheckResult make_check(std::string name, std::string metric, double value, double threshold,
                       bool upper_bound = true, std::string detail = {});

enum class VerifyLevel { fast, full };

VerifyLevel verify_level_from_string(const std::string& name);

/// Runs the oracle suite. fast: small grids only; full: the acceptance-sized checks.
std::vector<CheckResult> run_verification(VerifyLevel level, std::uint64_t seed);

/// JSON array of {name, metric, value, threshold, comparison, passed, detail}.
std::string verification_report_json(const std::vector<CheckResult>& checks);

// --- seeded randomness ----------------------------------------------------------------------

/// Reproducible uniform samples in [-1, 1) (splitmix64 stream, platform independent).
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next_u64();
    double next();

private:
    std::uint64_t state_;
};

Trace random_trace(const Grid& grid, const std::vector<bool>& mask, UniformStream& rng);
/// Random H^1_0 profile at t = T (zero endpoints).
SpatialProfile random_h10_profile(const Grid& grid, UniformStream& rng);
SpatialProfile random_l2_profile(const Grid& grid, UniformStream& rng);

}  // namespace hcw
