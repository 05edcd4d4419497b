#include "hcw/grid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "hcw/errors.hpp"

namespace hcw {

Grid::Grid(const DomainSpec& domain, int ny, int nt, double cfl_safety)
    : domain_(domain), ny_(ny), nt_(nt) {
    domain_.validate();
    if (ny < 8 || nt < 8) {
        throw ConfigError(fmt::format("grid needs ny >= 8 and nt >= 8, got ny = {}, nt = {}", ny, nt));
    }
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) {
        throw ConfigError(fmt::format("cfl_safety must lie in (0, 1], got {}", cfl_safety));
    }
    const double limit = cfl_safety * dy() / (1.0 + domain_.k);
    if (dt() > limit * (1.0 + 1e-12)) {
        throw ConfigError(fmt::format(
            "CFL violated: dt = {:.6g} exceeds {:.3g} * dy / (1 + k) = {:.6g}; raise nt to at least {}",
            dt(), cfl_safety, limit, static_cast<int>(std::ceil(domain_.T / limit))));
    }
}

Grid Grid::with_cfl(const DomainSpec& domain, int ny, double cfl_safety) {
    const double limit = cfl_safety * (1.0 / ny) / (1.0 + domain.k);
    const int nt = std::max(8, static_cast<int>(std::ceil(domain.T / limit - 1e-9)));
    return Grid(domain, ny, nt, cfl_safety);
}

double Grid::space_weight(int j) const {
    return (j == 0 || j == ny_) ? 0.5 * dy() : dy();
}

double Grid::time_weight(int n) const {
    return (n == 0 || n == nt_) ? 0.5 * dt() : dt();
}

bool Grid::same_as(const Grid& other) const {
    return ny_ == other.ny_ && nt_ == other.nt_ && domain_.k == other.domain_.k &&
           domain_.T == other.domain_.T;
}

void Grid::require_same(const Grid& other, const char* what) const {
    if (!same_as(other)) {
        throw ShapeError(fmt::format("{}: grids differ ({}x{} vs {}x{})", what, ny_, nt_, other.ny_,
                                     other.nt_));
    }
}

// --- Field -----------------------------------------------------------------------

Field::Field(const Grid& grid) : grid_(grid), values_(grid.node_count(), 0.0) {}

std::span<double> Field::level(int n) {
    return {values_.data() + grid_.index(0, n), static_cast<std::size_t>(grid_.ny() + 1)};
}

std::span<const double> Field::level(int n) const {
    return {values_.data() + grid_.index(0, n), static_cast<std::size_t>(grid_.ny() + 1)};
}

Field& Field::operator+=(const Field& other) {
    axpy(1.0, other);
    return *this;
}

Field& Field::operator-=(const Field& other) {
    axpy(-1.0, other);
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

void Field::axpy(double s, const Field& other) {
    grid_.require_same(other.grid_, "Field::axpy");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * other.values_[i];
}

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::integral_product(const Field& other) const {
    grid_.require_same(other.grid_, "Field::integral_product");
    double sum = 0.0;
    for (int n = 0; n <= grid_.nt(); ++n) {
        for (int j = 0; j <= grid_.ny(); ++j) {
            sum += grid_.volume_weight(j, n) * (*this)(j, n) * other(j, n);
        }
    }
    return sum;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

// --- SpatialProfile ----------------------------------------------------------------

SpatialProfile::SpatialProfile(int ny, double time, const DomainSpec& domain)
    : SpatialProfile(std::vector<double>(static_cast<std::size_t>(ny) + 1, 0.0), time, domain) {}

SpatialProfile::SpatialProfile(std::vector<double> values, double time, const DomainSpec& domain)
    : values_(std::move(values)), time_(time), alpha_(hcw::alpha(domain, time)), domain_(domain) {
    if (values_.size() < 3) {
        throw ShapeError("a spatial profile needs at least three nodes");
    }
}

SpatialProfile SpatialProfile::at_final_time(const Grid& grid) {
    return SpatialProfile(grid.ny(), grid.T(), grid.domain());
}

SpatialProfile& SpatialProfile::operator+=(const SpatialProfile& other) {
    axpy(1.0, other);
    return *this;
}

SpatialProfile& SpatialProfile::operator-=(const SpatialProfile& other) {
    axpy(-1.0, other);
    return *this;
}

SpatialProfile& SpatialProfile::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

void SpatialProfile::axpy(double s, const SpatialProfile& other) {
    require_compatible(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * other.values_[i];
}

bool SpatialProfile::endpoints_zero(double tol) const {
    return std::abs(values_.front()) <= tol && std::abs(values_.back()) <= tol;
}

void SpatialProfile::require_compatible(const SpatialProfile& other) const {
    if (values_.size() != other.values_.size() || alpha_ != other.alpha_) {
        throw ShapeError(fmt::format("profiles on different grids ({} nodes, alpha {} vs {} nodes, alpha {})",
                                     values_.size(), alpha_, other.values_.size(), other.alpha_));
    }
}

SpatialProfile operator+(SpatialProfile a, const SpatialProfile& b) { return a += b; }
SpatialProfile operator-(SpatialProfile a, const SpatialProfile& b) { return a -= b; }
SpatialProfile operator*(double s, SpatialProfile a) { return a *= s; }

// --- Trace -------------------------------------------------------------------------

Trace::Trace(const Grid& grid, Side side)
    : values_(static_cast<std::size_t>(grid.nt()) + 1, 0.0), dt_(grid.dt()), side_(side) {}

Trace::Trace(const Grid& grid, std::vector<double> values, Side side)
    : values_(std::move(values)), dt_(grid.dt()), side_(side) {
    if (values_.size() != static_cast<std::size_t>(grid.nt()) + 1) {
        throw ShapeError(fmt::format("trace has {} samples, grid needs {}", values_.size(), grid.nt() + 1));
    }
}

Trace& Trace::restrict_to(const std::vector<bool>& mask) {
    if (mask.size() != values_.size()) {
        throw ShapeError("mask length does not match trace");
    }
    for (std::size_t n = 0; n < values_.size(); ++n) {
        if (!mask[n]) values_[n] = 0.0;
    }
    mask_ = mask;
    return *this;
}

Trace& Trace::operator+=(const Trace& other) {
    axpy(1.0, other);
    return *this;
}

Trace& Trace::operator-=(const Trace& other) {
    axpy(-1.0, other);
    return *this;
}

Trace& Trace::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

void Trace::axpy(double s, const Trace& other) {
    if (other.values_.size() != values_.size()) {
        throw ShapeError("traces of different length");
    }
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += s * other.values_[n];
}

double Trace::inner(const Trace& other) const {
    if (other.values_.size() != values_.size()) {
        throw ShapeError("traces of different length");
    }
    const std::size_t last = values_.size() - 1;
    double sum = 0.0;
    for (std::size_t n = 0; n <= last; ++n) {
        const double w = (n == 0 || n == last) ? 0.5 : 1.0;
        sum += w * values_[n] * other.values_[n];
    }
    return sum * dt_;
}

double Trace::norm() const { return std::sqrt(inner(*this)); }

double Trace::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

Trace operator+(Trace a, const Trace& b) { return a += b; }
Trace operator-(Trace a, const Trace& b) { return a -= b; }
Trace operator*(double s, Trace a) { return a *= s; }

// --- norms -------------------------------------------------------------------------

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void require_h10(const SpatialProfile& f, const char* what) {
    const double tol = 1e-12 * std::max(1.0, max_abs(f.values()));
    if (!f.endpoints_zero(tol)) {
        throw PreconditionError(fmt::format("{}: H^1_0 profile must vanish at both endpoints (got {}, {})",
                                            what, f[0], f[f.ny()]));
    }
}

// Interior solve of the Dirichlet Laplacian (1/h^2) tridiag(-1, 2, -1) v = f.
std::vector<double> dirichlet_solve(const SpatialProfile& f) {
    const int m = f.ny() - 1;
    const double h2 = f.h() * f.h();
    std::vector<double> lower(m, -1.0 / h2), diag(m, 2.0 / h2), upper(m, -1.0 / h2);
    std::vector<double> rhs(f.values().begin() + 1, f.values().end() - 1);
    solve_tridiagonal(lower, diag, upper, rhs);
    return rhs;
}

}  // namespace

double l2_inner(const SpatialProfile& f, const SpatialProfile& g) {
    f.require_compatible(g);
    const int ny = f.ny();
    double sum = 0.0;
    for (int j = 0; j <= ny; ++j) {
        const double w = (j == 0 || j == ny) ? 0.5 : 1.0;
        sum += w * f[j] * g[j];
    }
    return sum * f.h();
}

double l2_norm_physical(const SpatialProfile& f) { return std::sqrt(l2_inner(f, f)); }

double h10_inner(const SpatialProfile& f, const SpatialProfile& g) {
    f.require_compatible(g);
    require_h10(f, "h10_inner");
    require_h10(g, "h10_inner");
    double sum = 0.0;
    for (int j = 0; j < f.ny(); ++j) {
        sum += (f[j + 1] - f[j]) * (g[j + 1] - g[j]);
    }
    return sum / f.h();
}

double h10_norm_physical(const SpatialProfile& f) { return std::sqrt(h10_inner(f, f)); }

double hminus1_inner(const SpatialProfile& f, const SpatialProfile& g) {
    f.require_compatible(g);
    const std::vector<double> v = dirichlet_solve(g);
    double sum = 0.0;
    for (int j = 1; j < f.ny(); ++j) sum += f[j] * v[j - 1];
    return sum * f.h();
}

double hminus1_norm_physical(const SpatialProfile& f) {
    return std::sqrt(std::max(0.0, hminus1_inner(f, f)));
}

double duality_pairing(const SpatialProfile& f, const SpatialProfile& g) {
    f.require_compatible(g);
    require_h10(g, "duality_pairing");
    // trapezoid; the endpoint terms vanish because g does
    double sum = 0.0;
    for (int j = 1; j < f.ny(); ++j) sum += f[j] * g[j];
    return sum * f.h();
}

SpatialProfile poisson_solve(const SpatialProfile& f) {
    const std::vector<double> v = dirichlet_solve(f);
    SpatialProfile out(f.ny(), f.time(), f.domain());
    std::copy(v.begin(), v.end(), out.values().begin() + 1);
    return out;
}

SpatialProfile dirichlet_laplacian(const SpatialProfile& f) {
    require_h10(f, "dirichlet_laplacian");
    SpatialProfile out(f.ny(), f.time(), f.domain());
    const double h2 = f.h() * f.h();
    for (int j = 1; j < f.ny(); ++j) {
        out[j] = (2.0 * f[j] - f[j - 1] - f[j + 1]) / h2;
    }
    return out;
}

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs) {
    const std::size_t m = diag.size();
    if (m == 0) return;
    std::vector<double> c(m);
    double denom = diag[0];
    c[0] = upper[0] / denom;
    rhs[0] /= denom;
    for (std::size_t i = 1; i < m; ++i) {
        denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for (std::size_t i = m - 1; i-- > 0;) {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

// --- CSV -------------------------------------------------------------------------

std::string format_exact(double v) { return fmt::format("{:.17g}", v); }

namespace {

void write_preamble(std::ostream& os, const CsvPreamble& preamble) {
    for (const auto& line : preamble) os << "# " << line << '\n';
}

std::vector<std::pair<double, double>> read_pairs(std::istream& is) {
    std::vector<std::pair<double, double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double a = 0.0;
        double b = 0.0;
        if (!(ls >> a >> b)) continue;  // header row
        rows.emplace_back(a, b);
    }
    if (rows.size() < 2) {
        throw ConfigError("CSV needs at least two numeric (coordinate, value) rows");
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

double interpolate(const std::vector<std::pair<double, double>>& rows, double s) {
    if (s <= rows.front().first) return rows.front().second;
    if (s >= rows.back().first) return rows.back().second;
    auto it = std::lower_bound(rows.begin(), rows.end(), s,
                               [](const auto& row, double key) { return row.first < key; });
    const auto& [x1, v1] = *it;
    const auto& [x0, v0] = *(it - 1);
    if (x1 == x0) return v1;
    return v0 + (v1 - v0) * (s - x0) / (x1 - x0);
}

}  // namespace

void write_profile_csv(std::ostream& os, const SpatialProfile& f, const CsvPreamble& preamble) {
    write_preamble(os, preamble);
    os << "x,value\n";
    for (int j = 0; j <= f.ny(); ++j) {
        os << format_exact(f.x(j)) << ',' << format_exact(f[j]) << '\n';
    }
}

void write_trace_csv(std::ostream& os, const Trace& tr, const CsvPreamble& preamble) {
    write_preamble(os, preamble);
    os << "t,value\n";
    for (int n = 0; n <= tr.nt(); ++n) {
        os << format_exact(tr.t(n)) << ',' << format_exact(tr[n]) << '\n';
    }
}

void write_field_csv(std::ostream& os, const Field& f, const CsvPreamble& preamble) {
    write_preamble(os, preamble);
    os << "y,t,value\n";
    const Grid& g = f.grid();
    for (int n = 0; n <= g.nt(); ++n) {
        for (int j = 0; j <= g.ny(); ++j) {
            os << format_exact(g.y(j)) << ',' << format_exact(g.t(n)) << ',' << format_exact(f(j, n))
               << '\n';
        }
    }
}

SpatialProfile read_profile_csv(std::istream& is, int ny, double time, const DomainSpec& domain) {
    const auto rows = read_pairs(is);
    SpatialProfile out(ny, time, domain);
    const double x0 = rows.front().first;
    const double x1 = rows.back().first;
    for (int j = 0; j <= ny; ++j) {
        out[j] = interpolate(rows, x0 + (x1 - x0) * j / ny);
    }
    return out;
}

Trace read_trace_csv(std::istream& is, const Grid& grid) {
    const auto rows = read_pairs(is);
    Trace out(grid);
    for (int n = 0; n <= grid.nt(); ++n) out[n] = interpolate(rows, grid.t(n));
    return out;
}

}  // namespace hcw
