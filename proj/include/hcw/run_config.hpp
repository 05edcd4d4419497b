#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcw/coupled.hpp"
#include "hcw/geometry.hpp"
#include "hcw/grid.hpp"
#include "hcw/leader_dual.hpp"

namespace hcw {

/// Named analytic family evaluated at one coordinate (x for spatial profiles, t for traces):
///   sine        amplitude * sin(frequency * pi * s + phase)^power
///   gaussian    amplitude * exp(-(s - center)^2 / (2 width^2))
///   polynomial  sum_i coefficients[i] s^i
///   constant    value
///   zero
///   csv         samples from a file, linearly interpolated
/// An optional support [a, b] zeroes the profile outside it.
struct ProfileSpec {
    std::string family = "zero";
    double amplitude = 1.0;
    double frequency = 1.0;
    double phase = 0.0;
    int power = 1;
    double center = 0.5;
    double width = 0.1;
    double value = 0.0;
    std::vector<double> coefficients;
    std::filesystem::path csv_path;
    std::optional<std::pair<double, double>> support;

    /// Analytic families only.
    double evaluate(double s) const;
};

SpatialProfile sample_spatial(const ProfileSpec& p, int ny, double time, const DomainSpec& domain);
Trace sample_trace(const ProfileSpec& p, const Grid& grid);

enum class TargetMode { explicit_balls, free_state, manufactured };

struct TargetConfig {
    TargetMode mode = TargetMode::manufactured;
    std::optional<ProfileSpec> u0;
    std::optional<ProfileSpec> u1;
    double rho0 = 0.0;
    double rho1 = 0.0;
    std::optional<ProfileSpec> reference_control;
    double radius_fraction = 0.05;
};

/// Axes of a cartesian sweep; an empty axis keeps the base value.
/// `radius` is the radius fraction for manufactured targets and a factor on (rho0, rho1) otherwise.
struct SweepSpec {
    std::vector<double> k;
    std::vector<double> T;
    std::vector<double> sigma;
    std::vector<double> radius;
};

struct RunConfig {
    DomainSpec domain;
    int ny = 41;
    std::optional<int> nt;
    double cfl_safety = kDefaultCflSafety;

    double sigma = 1.0;
    std::optional<ProfileSpec> u_tilde2_space;
    std::optional<ProfileSpec> u_tilde2_time;
    FollowerSolverOptions solver;
    PartitionMode partition_mode = PartitionMode::overlap;
    double t_split = 0.0;
    double delta = 0.0;

    std::optional<ProfileSpec> control;
    std::optional<ProfileSpec> initial_value;
    std::optional<ProfileSpec> initial_velocity;
    std::optional<TargetConfig> targets;
    DualOptions optimizer;
    SweepSpec sweep;
    std::vector<double> threshold_k;

    std::string output_dir = "out";
    std::uint64_t seed = 1;

    /// Canonical (key-sorted, compact) JSON of the document as loaded, and its FNV-1a hash.
    std::string canonical;
    std::uint64_t hash = 0;

    Grid make_grid() const;
    FollowerConfig make_follower(const Grid& grid) const;
    TargetSpec make_targets(const FollowerConfig& cfg) const;
};

/// Parses and validates; relative CSV paths resolve against base_dir. Throws ConfigError.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

}  // namespace hcw
