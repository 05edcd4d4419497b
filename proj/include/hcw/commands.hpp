#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hcw/run_config.hpp"
#include "hcw/verify.hpp"

namespace hcw {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitSolver = 3,
    kExitUncertified = 4,
    kExitVerifyFailed = 5,
};

/// Runs body and maps library errors to the exit-code contract, printing the message to err.
int run_guarded(const std::function<int()>& body, std::ostream& err);

int cmd_simulate(const RunConfig& rc, const std::filesystem::path& out, std::ostream& log);
int cmd_nash(const RunConfig& rc, const std::filesystem::path& out, std::ostream& log);
int cmd_leader(const RunConfig& rc, const std::filesystem::path& out, std::ostream& log);
int cmd_verify(VerifyLevel level, std::uint64_t seed, const std::filesystem::path& out, std::ostream& log);
/// Prints the (k, T_min) table; writes threshold.csv when out is non-empty.
int cmd_threshold(const std::vector<double>& ks, const std::filesystem::path& out, std::ostream& log);
/// Cartesian sweep over (k, T, sigma, radius); aggregate rows are written in cell order.
int cmd_sweep(const RunConfig& rc, const std::filesystem::path& out, int workers, std::ostream& log);

}  // namespace hcw
