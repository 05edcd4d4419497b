#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hcw/geometry.hpp"

namespace hcw {

inline constexpr double kDefaultCflSafety = 0.8;

/// Uniform discretization of the reference cylinder (0,1) x (0,T):
/// nodes y_j = j/ny (j = 0..ny) and t_n = n T/nt (n = 0..nt).
///
/// The physical interval at time t is (0, alpha(t)); every physical integral
/// carries the Jacobian dx = alpha(t) dy. Quadrature is composite trapezoid in
/// both directions.
class Grid {
public:
    Grid(const DomainSpec& domain, int ny, int nt, double cfl_safety = kDefaultCflSafety);

    /// Smallest nt that satisfies dt <= cfl_safety * dy / (1 + k).
    static Grid with_cfl(const DomainSpec& domain, int ny, double cfl_safety = kDefaultCflSafety);

    const DomainSpec& domain() const { return domain_; }
    int ny() const { return ny_; }
    int nt() const { return nt_; }
    double dy() const { return 1.0 / ny_; }
    double dt() const { return domain_.T / nt_; }
    double y(int j) const { return j * dy(); }
    double t(int n) const { return n == nt_ ? domain_.T : n * dt(); }
    double alpha_at(int n) const { return 1.0 + domain_.k * t(n); }
    double k() const { return domain_.k; }
    double T() const { return domain_.T; }

    /// Trapezoid weight of node j on [0,1] (no Jacobian).
    double space_weight(int j) const;
    /// Trapezoid weight of node n on [0,T].
    double time_weight(int n) const;
    /// Weight of node (j,n) in the physical space-time integral over the moving domain.
    double volume_weight(int j, int n) const {
        return alpha_at(n) * space_weight(j) * time_weight(n);
    }

    std::size_t node_count() const {
        return static_cast<std::size_t>(ny_ + 1) * static_cast<std::size_t>(nt_ + 1);
    }
    std::size_t index(int j, int n) const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(ny_ + 1) +
               static_cast<std::size_t>(j);
    }

    bool same_as(const Grid& other) const;
    void require_same(const Grid& other, const char* what) const;

private:
    DomainSpec domain_;
    int ny_;
    int nt_;
};

/// Space-time nodal values on the reference cylinder, time-major.
class Field {
public:
    explicit Field(const Grid& grid);

    const Grid& grid() const { return grid_; }
    double& operator()(int j, int n) { return values_[grid_.index(j, n)]; }
    double operator()(int j, int n) const { return values_[grid_.index(j, n)]; }

    std::span<double> level(int n);
    std::span<const double> level(int n) const;
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);
    /// this += s * other
    void axpy(double s, const Field& other);

    double max_abs() const;
    bool all_finite() const;
    /// Physical L2(Q) inner product with trapezoid weights and Jacobian.
    double integral_product(const Field& other) const;

private:
    Grid grid_;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Values over the reference nodes y_j at one time, living on (0, alpha(t)).
class SpatialProfile {
public:
    SpatialProfile(int ny, double time, const DomainSpec& domain);
    SpatialProfile(std::vector<double> values, double time, const DomainSpec& domain);

    /// Profile at the final time of a grid.
    static SpatialProfile at_final_time(const Grid& grid);

    int ny() const { return static_cast<int>(values_.size()) - 1; }
    double time() const { return time_; }
    double alpha() const { return alpha_; }
    const DomainSpec& domain() const { return domain_; }
    /// Physical spacing alpha(t) / ny.
    double h() const { return alpha_ / ny(); }
    double x(int j) const { return j * h(); }

    double& operator[](int j) { return values_[j]; }
    double operator[](int j) const { return values_[j]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    SpatialProfile& operator+=(const SpatialProfile& other);
    SpatialProfile& operator-=(const SpatialProfile& other);
    SpatialProfile& operator*=(double s);
    void axpy(double s, const SpatialProfile& other);

    bool endpoints_zero(double tol = 0.0) const;
    void require_compatible(const SpatialProfile& other) const;

private:
    std::vector<double> values_;
    double time_;
    double alpha_;
    DomainSpec domain_;
};

SpatialProfile operator+(SpatialProfile a, const SpatialProfile& b);
SpatialProfile operator-(SpatialProfile a, const SpatialProfile& b);
SpatialProfile operator*(double s, SpatialProfile a);

enum class Side { left, right };

/// Boundary time series at y = 0 (left) or y = 1 (right), zero outside its mask.
class Trace {
public:
    Trace(const Grid& grid, Side side = Side::left);
    Trace(const Grid& grid, std::vector<double> values, Side side = Side::left);

    int nt() const { return static_cast<int>(values_.size()) - 1; }
    double dt() const { return dt_; }
    double t(int n) const { return n * dt_; }
    Side side() const { return side_; }

    double& operator[](int n) { return values_[n]; }
    double operator[](int n) const { return values_[n]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    /// Zero every entry outside `mask` and remember the mask.
    Trace& restrict_to(const std::vector<bool>& mask);
    const std::vector<bool>& mask() const { return mask_; }

    Trace& operator+=(const Trace& other);
    Trace& operator-=(const Trace& other);
    Trace& operator*=(double s);
    void axpy(double s, const Trace& other);

    /// Trapezoid inner product over [0,T] (dSigma = dt on the fixed endpoint).
    double inner(const Trace& other) const;
    double norm() const;
    double max_abs() const;

private:
    std::vector<double> values_;
    std::vector<bool> mask_;
    double dt_;
    Side side_;
};

Trace operator+(Trace a, const Trace& b);
Trace operator-(Trace a, const Trace& b);
Trace operator*(double s, Trace a);

// --- physical norms on Omega_t = (0, alpha(t)) ---------------------------------

double l2_inner(const SpatialProfile& f, const SpatialProfile& g);
double l2_norm_physical(const SpatialProfile& f);

/// Discrete H^1_0 norm, sqrt(sum_j (f_{j+1}-f_j)^2 / h). Throws PreconditionError
/// if the endpoints are not zero.
double h10_norm_physical(const SpatialProfile& f);
double h10_inner(const SpatialProfile& f, const SpatialProfile& g);

/// H^{-1} norm realized as sqrt(<f, v>) with -v_xx = f, v(0) = v(alpha) = 0,
/// using the same three-point Dirichlet Laplacian that defines the H^1_0 norm.
double hminus1_norm_physical(const SpatialProfile& f);
double hminus1_inner(const SpatialProfile& f, const SpatialProfile& g);

/// <f, g> between an H^{-1} representative f and g in H^1_0 (trapezoid, physical x).
double duality_pairing(const SpatialProfile& f, const SpatialProfile& g);

/// Riesz map H^{-1} -> H^1_0: the discrete Dirichlet solution of -v_xx = f.
SpatialProfile poisson_solve(const SpatialProfile& f);
/// Inverse Riesz map: the H^{-1} representative -f_xx (interior nodes, zero at ends).
SpatialProfile dirichlet_laplacian(const SpatialProfile& f);

/// Solve a tridiagonal system in place (Thomas algorithm, no pivoting).
/// lower[i] multiplies x[i-1], upper[i] multiplies x[i+1].
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs);

// --- CSV ---------------------------------------------------------------------------

/// Lines written verbatim as '# ...' comments before the header row.
using CsvPreamble = std::vector<std::string>;

void write_profile_csv(std::ostream& os, const SpatialProfile& f, const CsvPreamble& preamble = {});
void write_trace_csv(std::ostream& os, const Trace& tr, const CsvPreamble& preamble = {});
void write_field_csv(std::ostream& os, const Field& f, const CsvPreamble& preamble = {});

/// Read (coordinate, value) rows and interpolate linearly onto the profile's nodes.
/// The coordinate range in the file is mapped onto (0, alpha).
SpatialProfile read_profile_csv(std::istream& is, int ny, double time, const DomainSpec& domain);
Trace read_trace_csv(std::istream& is, const Grid& grid);

/// Formats a double with 17 significant digits.
std::string format_exact(double v);

}  // namespace hcw
