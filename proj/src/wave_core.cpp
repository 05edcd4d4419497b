#include "hcw/wave_core.hpp"

#include <cmath>

#include <fmt/core.h>

#include "hcw/errors.hpp"

namespace hcw {

namespace {

struct StencilTerm {
    int offset;
    double coef;
};

// 2 dy * (D_y v)_j: central inside, second-order one-sided at the ends.
std::array<StencilTerm, 3> dy_stencil(int ny, int j) {
    if (j == 0) return {{{0, -3.0}, {1, 4.0}, {2, -1.0}}};
    if (j == ny) return {{{0, 3.0}, {-1, -4.0}, {-2, 1.0}}};
    return {{{-1, -1.0}, {1, 1.0}, {0, 0.0}}};
}

struct Coefficients {
    double mixed;      // 2 k y / alpha
    double diffusion;  // (1 - k^2 y^2) / alpha^2
    double drift;      // 2 k^2 y / alpha^2
    double convect;    // k y / alpha
};

Coefficients coefficients(const Grid& g, int j, int level) {
    const double k = g.k();
    const double y = g.y(j);
    const double a = g.alpha_at(level);
    return {2.0 * k * y / a, (1.0 - k * k * y * y) / (a * a), 2.0 * k * k * y / (a * a), k * y / a};
}

void band_multiply_subtract(const Band& band, std::span<const double> x, std::span<double> out) {
    const int n = static_cast<int>(band.size());
    for (int j = 0; j < n; ++j) {
        double sum = 0.0;
        for (int o = -2; o <= 2; ++o) {
            const double c = band[j][o + 2];
            if (c != 0.0) sum += c * x[j + o];
        }
        out[j] -= sum;
    }
}

void band_transpose_multiply_subtract(const Band& band, std::span<const double> x,
                                      std::span<double> out) {
    const int n = static_cast<int>(band.size());
    for (int j = 0; j < n; ++j) {
        if (x[j] == 0.0) continue;
        for (int o = -2; o <= 2; ++o) {
            const double c = band[j][o + 2];
            if (c != 0.0) out[j + o] -= c * x[j];
        }
    }
}

void solve_band_diag(const Band& diag, std::span<double> rhs, bool transpose) {
    const int n = static_cast<int>(diag.size());
    std::vector<double> lower(n, 0.0), mid(n), upper(n, 0.0);
    for (int j = 0; j < n; ++j) {
        mid[j] = diag[j][2];
        if (!transpose) {
            lower[j] = diag[j][1];
            upper[j] = diag[j][3];
        } else {
            if (j > 0) lower[j] = diag[j - 1][3];
            if (j + 1 < n) upper[j] = diag[j + 1][1];
        }
    }
    solve_tridiagonal(lower, mid, upper, rhs);
}

bool finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void check_problem(const Grid& grid, const WaveProblem& prob) {
    if (prob.bc0 && prob.bc0->nt() != grid.nt()) throw ShapeError("bc0 does not match the time grid");
    if (prob.bc1 && prob.bc1->nt() != grid.nt()) throw ShapeError("bc1 does not match the time grid");
    if (prob.source) grid.require_same(prob.source->grid(), "wave source");
    const double t_data = prob.direction == Direction::forward ? 0.0 : grid.T();
    for (const auto* d : {&prob.data.value, &prob.data.velocity}) {
        if (*d && ((*d)->ny() != grid.ny() || (*d)->time() != t_data)) {
            throw ShapeError(fmt::format("wave data must live on {} nodes at t = {}", grid.ny() + 1, t_data));
        }
    }
    if (prob.data.value) {
        // corner compatibility between data and Dirichlet values
        const int n = prob.direction == Direction::forward ? 0 : grid.nt();
        const auto& v = *prob.data.value;
        const double tol = grid.dy() * std::max(1.0, std::max(std::abs(v[0]), std::abs(v[grid.ny()])));
        const double b0 = prob.bc0 ? (*prob.bc0)[n] : 0.0;
        const double b1 = prob.bc1 ? (*prob.bc1)[n] : 0.0;
        if (std::abs(b0 - v[0]) > tol || std::abs(b1 - v[grid.ny()]) > tol) {
            throw PreconditionError("boundary values incompatible with the data at the corner");
        }
    }
}

}  // namespace

SpaceTimeOperator::SpaceTimeOperator(const Grid& grid, Direction direction)
    : grid_(grid), direction_(direction) {}

LevelBlocks SpaceTimeOperator::blocks(int m) const {
    const int ny = grid_.ny();
    const double dt = grid_.dt();
    const double dy = grid_.dy();
    const double s = sign();
    const BandRow zero{0.0, 0.0, 0.0, 0.0, 0.0};

    LevelBlocks b;
    b.level = level_of_step(m);
    b.diag.assign(ny + 1, zero);
    b.diag[0][2] = 1.0;
    b.diag[ny][2] = 1.0;
    if (m == 0) {
        for (int j = 1; j < ny; ++j) b.diag[j][2] = 1.0;
        return b;
    }

    const int c = center_of_step(m);
    b.prev1 = c;
    b.coupling1.assign(ny + 1, zero);
    for (int j = 1; j < ny; ++j) {
        const Coefficients cf = coefficients(grid_, j, c);
        BandRow& r = b.coupling1[j];
        r[1] = -cf.diffusion / (dy * dy) - cf.drift / (2.0 * dy);
        r[2] = -2.0 / (dt * dt) + 2.0 * cf.diffusion / (dy * dy);
        r[3] = -cf.diffusion / (dy * dy) + cf.drift / (2.0 * dy);
    }

    if (m == 1) {
        // Taylor start: 2 (v^n - v^c - s dt V)/dt^2 - a D_y V - b D_yy v^c + c D_y v^c = S^c
        // with V = u_t + (k y / alpha) D_y v^c; the u_t part goes to the right-hand side.
        for (int j = 1; j < ny; ++j) {
            b.diag[j][2] = 2.0 / (dt * dt);
            const double a = coefficients(grid_, j, c).mixed;
            const std::array<StencilTerm, 3> uses{{{j, -2.0 * s / dt}, {j + 1, -a / (2.0 * dy)}, {j - 1, a / (2.0 * dy)}}};
            for (const auto& [i, w] : uses) {
                const double conv = coefficients(grid_, i, c).convect;
                if (conv == 0.0) continue;
                for (const auto& [off, coef] : dy_stencil(ny, i)) {
                    if (coef == 0.0) continue;
                    b.coupling1[j][i + off - j + 2] += w * conv * coef / (2.0 * dy);
                }
            }
        }
        return b;
    }

    // centered step: (v^{c+1} - 2 v^c + v^{c-1})/dt^2 - a (D_y v^{c+1} - D_y v^{c-1})/(2 dt) - ...
    b.prev2 = b.level - 2 * sign();
    b.coupling2.assign(ny + 1, zero);
    for (int j = 1; j < ny; ++j) {
        const double a = coefficients(grid_, j, c).mixed;
        const double mixed = s * a / (4.0 * dt * dy);
        b.diag[j] = {0.0, mixed, 1.0 / (dt * dt), -mixed, 0.0};
        b.coupling2[j] = {0.0, -mixed, 1.0 / (dt * dt), mixed, 0.0};
    }
    return b;
}

std::vector<double> assemble_rhs(const SpaceTimeOperator& op, const WaveProblem& prob) {
    const Grid& g = op.grid();
    const int ny = g.ny();
    std::vector<double> rhs(g.node_count(), 0.0);
    for (int m = 0; m <= g.nt(); ++m) {
        const int n = op.level_of_step(m);
        if (prob.bc0) rhs[g.index(0, n)] = (*prob.bc0)[n];
        if (prob.bc1) rhs[g.index(ny, n)] = (*prob.bc1)[n];
        if (m == 0) {
            if (prob.data.value) {
                for (int j = 1; j < ny; ++j) rhs[g.index(j, n)] = (*prob.data.value)[j];
            }
            continue;
        }
        const int c = op.center_of_step(m);
        if (prob.source) {
            for (int j = 1; j < ny; ++j) rhs[g.index(j, n)] = (*prob.source)(j, c);
        }
        if (m == 1 && prob.data.velocity) {
            const auto& d1 = *prob.data.velocity;
            const double s = op.sign();
            for (int j = 1; j < ny; ++j) {
                const double a = coefficients(g, j, c).mixed;
                rhs[g.index(j, n)] += 2.0 * s / g.dt() * d1[j] + a * (d1[j + 1] - d1[j - 1]) / (2.0 * g.dy());
            }
        }
    }
    return rhs;
}

Field substitute(const SpaceTimeOperator& op, const std::vector<double>& rhs) {
    const Grid& g = op.grid();
    Field v(g);
    std::vector<double> r(g.ny() + 1);
    for (int m = 0; m <= g.nt(); ++m) {
        const LevelBlocks b = op.blocks(m);
        std::copy_n(rhs.begin() + static_cast<std::ptrdiff_t>(g.index(0, b.level)), g.ny() + 1, r.begin());
        if (b.prev1 >= 0) band_multiply_subtract(b.coupling1, v.level(b.prev1), r);
        if (b.prev2 >= 0) band_multiply_subtract(b.coupling2, v.level(b.prev2), r);
        solve_band_diag(b.diag, r, false);
        if (!finite(r)) {
            throw InstabilityError(
                fmt::format("non-finite values at time step {} (t = {:.6g})", m, g.t(b.level)), m);
        }
        std::copy(r.begin(), r.end(), v.level(b.level).begin());
    }
    return v;
}

Field solve(const Grid& grid, const WaveProblem& prob) {
    check_problem(grid, prob);
    const SpaceTimeOperator op(grid, prob.direction);
    return substitute(op, assemble_rhs(op, prob));
}

Field solve_forward(const Grid& grid, const WaveProblem& prob) {
    if (prob.direction != Direction::forward) throw PreconditionError("solve_forward needs a forward problem");
    return solve(grid, prob);
}

Field solve_backward(const Grid& grid, const WaveProblem& prob) {
    if (prob.direction != Direction::backward) throw PreconditionError("solve_backward needs a backward problem");
    return solve(grid, prob);
}

Field AdjointSweep::adjoint_field() const {
    const Grid& g = grad_source.grid();
    Field p(g);
    for (int n = 0; n <= g.nt(); ++n) {
        for (int j = 1; j < g.ny(); ++j) p(j, n) = grad_source(j, n) / g.volume_weight(j, n);
    }
    return p;
}

Trace AdjointSweep::boundary_derivative() const {
    const Grid& g = grad_source.grid();
    Trace out(g);
    for (int n = 0; n <= g.nt(); ++n) out[n] = grad_bc0[n] / g.time_weight(n);
    return out;
}

AdjointSweep adjoint_sweep(const Grid& grid, const Field& seed) {
    grid.require_same(seed.grid(), "adjoint_sweep seed");
    const SpaceTimeOperator op(grid, Direction::forward);
    const int nt = grid.nt();
    const int ny = grid.ny();
    AdjointSweep out{Field(grid), Trace(grid), Trace(grid, Side::right), Field(grid)};
    Field& lambda = out.multipliers;

    std::optional<LevelBlocks> next1;  // blocks of step m + 1
    std::optional<LevelBlocks> next2;  // blocks of step m + 2
    std::vector<double> r(ny + 1);
    for (int m = nt; m >= 0; --m) {
        LevelBlocks b = op.blocks(m);
        const auto s = seed.level(b.level);
        std::copy(s.begin(), s.end(), r.begin());
        if (next1) band_transpose_multiply_subtract(next1->coupling1, lambda.level(next1->level), r);
        if (next2 && next2->prev2 == b.level) {
            band_transpose_multiply_subtract(next2->coupling2, lambda.level(next2->level), r);
        }
        solve_band_diag(b.diag, r, true);
        std::copy(r.begin(), r.end(), lambda.level(b.level).begin());
        next2 = std::move(next1);
        next1 = std::move(b);
    }

    for (int n = 0; n <= nt; ++n) {
        out.grad_bc0[n] = lambda(0, n);
        out.grad_bc1[n] = lambda(ny, n);
    }
    for (int m = 1; m <= nt; ++m) {
        const int n = op.level_of_step(m);
        const int c = op.center_of_step(m);
        for (int j = 1; j < ny; ++j) out.grad_source(j, c) = lambda(j, n);
    }
    return out;
}

Trace trace_normal_derivative(const Field& v, Side side) {
    const Grid& g = v.grid();
    const int ny = g.ny();
    Trace out(g, side);
    for (int n = 0; n <= g.nt(); ++n) {
        const double vy = side == Side::left
                              ? (-3.0 * v(0, n) + 4.0 * v(1, n) - v(2, n)) / (2.0 * g.dy())
                              : (3.0 * v(ny, n) - 4.0 * v(ny - 1, n) + v(ny - 2, n)) / (2.0 * g.dy());
        out[n] = vy / g.alpha_at(n);
    }
    return out;
}

FinalState final_state(const Field& v) {
    const Grid& g = v.grid();
    const int ny = g.ny();
    const int m = g.nt();
    FinalState fs{SpatialProfile::at_final_time(g), SpatialProfile::at_final_time(g)};
    for (int j = 0; j <= ny; ++j) {
        fs.value[j] = v(j, m);
        double vy = 0.0;
        for (const auto& [off, coef] : dy_stencil(ny, j)) vy += coef * v(j + off, m);
        vy /= 2.0 * g.dy();
        const double vt = (3.0 * v(j, m) - 4.0 * v(j, m - 1) + v(j, m - 2)) / (2.0 * g.dt());
        fs.velocity[j] = vt - coefficients(g, j, m).convect * vy;
    }
    return fs;
}

Field final_state_seed(const Grid& grid, const std::vector<double>& value_coef,
                       const std::vector<double>& velocity_coef) {
    const int ny = grid.ny();
    const int m = grid.nt();
    if (value_coef.size() != static_cast<std::size_t>(ny + 1) ||
        velocity_coef.size() != static_cast<std::size_t>(ny + 1)) {
        throw ShapeError("final_state_seed coefficient length mismatch");
    }
    Field seed(grid);
    const double dt = grid.dt();
    for (int j = 0; j <= ny; ++j) {
        const double cu = velocity_coef[j];
        seed(j, m) += value_coef[j] + 3.0 * cu / (2.0 * dt);
        seed(j, m - 1) += -4.0 * cu / (2.0 * dt);
        seed(j, m - 2) += cu / (2.0 * dt);
        const double conv = coefficients(grid, j, m).convect;
        for (const auto& [off, coef] : dy_stencil(ny, j)) {
            seed(j + off, m) -= cu * conv * coef / (2.0 * grid.dy());
        }
    }
    return seed;
}

double physical_energy(const Field& v, int n) {
    const Grid& g = v.grid();
    if (n < 1 || n >= g.nt()) throw DomainError("physical_energy needs an interior time level");
    const int ny = g.ny();
    const double a = g.alpha_at(n);
    double kinetic = 0.0;
    double strain = 0.0;
    for (int j = 0; j <= ny; ++j) {
        double vy = 0.0;
        for (const auto& [off, coef] : dy_stencil(ny, j)) vy += coef * v(j + off, n);
        vy /= 2.0 * g.dy();
        const double ut = (v(j, n + 1) - v(j, n - 1)) / (2.0 * g.dt()) - coefficients(g, j, n).convect * vy;
        kinetic += g.space_weight(j) * a * ut * ut;
    }
    for (int j = 0; j < ny; ++j) {
        const double d = v(j + 1, n) - v(j, n);
        strain += d * d / (a * g.dy());
    }
    return 0.5 * (kinetic + strain);
}

}  // namespace hcw
