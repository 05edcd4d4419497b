#pragma once

#include <optional>

#include "hcw/coupled.hpp"

namespace hcw::detail {

/// Direct solution of one follower equilibrium as a single sparse saddle-point system:
///
///   E v - B0 (m2 z)                  = B0 base
///   E^T lambda - W_Q v               = seed0
///   sigma W_Sigma z + P B0^T lambda  = 0      (z = 0 off Sigma_2)
///
/// where B0 injects a trace into the x = 0 boundary rows. Nash: seed0 = -W_Q u_tilde2;
/// adjoint pair: base = 0 and seed0 = the final-state seed of (f0, f1).
struct KktSolution {
    Field state;
    Field multipliers;
    Trace follower;
    double residual = 0.0;  ///< ||K x - b|| / max(||b||, tiny)
};

inline constexpr int kMonolithicMaxNy = 64;

/// Throws ConfigError above kMonolithicMaxNy or when the factorization fails.
KktSolution kkt_follower_solve(const FollowerConfig& cfg, const Trace& base,
                               const std::optional<Field>& seed0);

}  // namespace hcw::detail
