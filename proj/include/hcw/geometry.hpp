#pragma once

#include <string>
#include <vector>

namespace hcw {

/// Expanding interval (0, 1 + k t) over the horizon [0, T].
struct DomainSpec {
    double k = 0.1;
    double T = 4.0;
    /// k = 0 is only meaningful for validating against the fixed-domain wave equation.
    bool allow_k_zero = false;

    /// Throws DomainError unless 0 < k < 1 (or k = 0 with allow_k_zero) and T > 0.
    void validate() const;
};

/// Moving endpoint alpha_k(t) = 1 + k t. Throws DomainError for t outside [0, T].
double alpha(const DomainSpec& spec, double t);

/// Reference coordinate y = x / alpha(t) of a physical point.
double to_cylinder(double x, double t, const DomainSpec& spec);
double from_cylinder(double y, double t, const DomainSpec& spec);

/// Smallest horizon for which approximate controllability is guaranteed:
/// (exp(2k(1+k)/(1-k)^3) - 1) / k, for 0 < k < 1.
double min_control_time(double k);

struct AdmissibilityReport {
    bool ok = true;
    std::string error;
    bool below_threshold = false;
    bool k_zero_validation_only = false;
    double t_min = 0.0;

    std::vector<std::string> warnings() const;
};

/// Never throws; a hard failure is reported through `ok`/`error`.
AdmissibilityReport check_admissible(const DomainSpec& spec);

enum class PartitionMode { overlap, time_split };

/// Split of the controlled boundary {x = 0} between leader (mask1) and follower (mask2),
/// sampled on the time grid.
struct SigmaPartition {
    PartitionMode mode = PartitionMode::overlap;
    std::vector<bool> mask1;
    std::vector<bool> mask2;

    /// Leader and follower share the whole boundary.
    static SigmaPartition overlap(int nt);
    /// Leader on t < t_split, follower on t >= t_split.
    static SigmaPartition time_split(int nt, double dt, double t_split);

    void validate() const;
};

const char* to_string(PartitionMode mode);
PartitionMode partition_mode_from_string(const std::string& name);

}  // namespace hcw
