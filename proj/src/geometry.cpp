#include "hcw/geometry.hpp"

#include <cmath>

#include <fmt/core.h>

#include "hcw/errors.hpp"

namespace hcw {

void DomainSpec::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw DomainError(fmt::format("horizon T must be positive, got {}", T));
    }
    if (k == 0.0 && allow_k_zero) {
        return;
    }
    if (!(k > 0.0 && k < 1.0)) {
        throw DomainError(fmt::format(
            "expansion speed k must satisfy 0 < k < 1 (the moving endpoint must be slower "
            "than the characteristic speed), got k = {}",
            k));
    }
}

double alpha(const DomainSpec& spec, double t) {
    // a few ulps of slack so grid times computed as n*dt never trip the check
    const double slack = 1e-12 * std::max(1.0, spec.T);
    if (t < -slack || t > spec.T + slack) {
        throw DomainError(fmt::format("time {} outside [0, {}]", t, spec.T));
    }
    return 1.0 + spec.k * t;
}

double to_cylinder(double x, double t, const DomainSpec& spec) {
    const double a = alpha(spec, t);
    if (x < 0.0 || x > a) {
        throw DomainError(fmt::format("position {} outside [0, {}] at t = {}", x, a, t));
    }
    return x / a;
}

double from_cylinder(double y, double t, const DomainSpec& spec) {
    if (y < 0.0 || y > 1.0) {
        throw DomainError(fmt::format("reference coordinate {} outside [0, 1]", y));
    }
    return y * alpha(spec, t);
}

double min_control_time(double k) {
    if (!(k > 0.0 && k < 1.0)) {
        throw DomainError(fmt::format("min_control_time needs 0 < k < 1, got {}", k));
    }
    const double exponent = 2.0 * k * (1.0 + k) / std::pow(1.0 - k, 3);
    // expm1 keeps full precision as k -> 0
    return std::expm1(exponent) / k;
}

std::vector<std::string> AdmissibilityReport::warnings() const {
    std::vector<std::string> out;
    if (below_threshold) {
        out.push_back(fmt::format("below_threshold: T does not exceed T_min = {:.6g}", t_min));
    }
    if (k_zero_validation_only) {
        out.push_back("k_zero_validation_only: k = 0 is a fixed domain, use for validation only");
    }
    return out;
}

AdmissibilityReport check_admissible(const DomainSpec& spec) {
    AdmissibilityReport report;
    if (!(spec.T > 0.0) || !std::isfinite(spec.T)) {
        report.ok = false;
        report.error = fmt::format("horizon T must be positive, got {}", spec.T);
        return report;
    }
    if (spec.k == 0.0) {
        report.k_zero_validation_only = true;
        if (!spec.allow_k_zero) {
            report.ok = false;
            report.error = "k = 0 requires allow_k_zero (validation mode); theory needs 0 < k < 1";
        }
        return report;
    }
    if (!(spec.k > 0.0 && spec.k < 1.0)) {
        report.ok = false;
        report.error = fmt::format(
            "expansion speed must satisfy 0 < k < 1, got k = {}; k > 1 is not supported", spec.k);
        return report;
    }
    report.t_min = min_control_time(spec.k);
    report.below_threshold = spec.T <= report.t_min;
    return report;
}

SigmaPartition SigmaPartition::overlap(int nt) {
    SigmaPartition p;
    p.mode = PartitionMode::overlap;
    p.mask1.assign(static_cast<std::size_t>(nt) + 1, true);
    p.mask2.assign(static_cast<std::size_t>(nt) + 1, true);
    return p;
}

SigmaPartition SigmaPartition::time_split(int nt, double dt, double t_split) {
    SigmaPartition p;
    p.mode = PartitionMode::time_split;
    p.mask1.resize(static_cast<std::size_t>(nt) + 1);
    p.mask2.resize(static_cast<std::size_t>(nt) + 1);
    for (int n = 0; n <= nt; ++n) {
        const bool leader = n * dt < t_split;
        p.mask1[n] = leader;
        p.mask2[n] = !leader;
    }
    return p;
}

void SigmaPartition::validate() const {
    if (mask1.size() != mask2.size()) {
        throw ShapeError("partition masks have different lengths");
    }
    for (std::size_t n = 0; n < mask1.size(); ++n) {
        if (mode == PartitionMode::overlap && !(mask1[n] && mask2[n])) {
            throw PreconditionError("overlap partition must mark every time node for both players");
        }
        if (mode == PartitionMode::time_split && (mask1[n] == mask2[n])) {
            throw PreconditionError(
                fmt::format("time-split partition must be a disjoint cover (node {})", n));
        }
    }
}

const char* to_string(PartitionMode mode) {
    return mode == PartitionMode::overlap ? "overlap" : "time-split";
}

PartitionMode partition_mode_from_string(const std::string& name) {
    if (name == "overlap") return PartitionMode::overlap;
    if (name == "time-split" || name == "time_split") return PartitionMode::time_split;
    throw ConfigError(fmt::format("unknown partition mode '{}'", name));
}

}  // namespace hcw
