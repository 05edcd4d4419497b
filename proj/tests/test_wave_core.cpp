#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hcw/errors.hpp"
#include "hcw/wave_core.hpp"

using namespace hcw;
using std::numbers::pi;

namespace {

Trace trace_of(const Grid& g, auto fn) {
    Trace tr(g);
    for (int n = 0; n <= g.nt(); ++n) tr[n] = fn(g.t(n));
    return tr;
}

double max_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace

TEST_SUITE("wave_core") {

TEST_CASE("zero data gives the zero field") {
    const Grid g = Grid::with_cfl(DomainSpec{0.1, 4.0}, 20);
    CHECK(solve_forward(g, WaveProblem{}).max_abs() == 0.0);
    WaveProblem back;
    back.direction = Direction::backward;
    CHECK(solve_backward(g, back).max_abs() == 0.0);
}

TEST_CASE("d'Alembert value and boundary flux at k = 0") {
    const DomainSpec d{0.0, 1.0, true};
    const Grid g(d, 200, 400);
    WaveProblem prob;
    prob.bc0 = trace_of(g, [](double t) { return std::sin(pi * t); });
    const Field u = solve_forward(g, prob);
    CHECK(std::abs(u(50, 200) - std::sin(0.25 * pi)) <= 5e-3);
    const Trace ux = trace_normal_derivative(u, Side::left);
    for (int n = 80; n <= 360; n += 20) CHECK(std::abs(ux[n] + pi * std::cos(pi * g.t(n))) <= 5e-2 * pi);
}

TEST_CASE("exact on a linear profile") {
    const DomainSpec d{0.1, 4.0};
    const Grid g = Grid::with_cfl(d, 16);
    Field v(g);
    for (int n = 0; n <= g.nt(); ++n)
        for (int j = 0; j <= g.ny(); ++j) v(j, n) = g.y(j) * g.alpha_at(n);
    const Trace ux = trace_normal_derivative(v, Side::left);
    for (int n = 0; n <= g.nt(); ++n) CHECK(ux[n] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(trace_normal_derivative(Field(g), Side::right).max_abs() == 0.0);
}

TEST_CASE("energy is conserved at k = 0") {
    const DomainSpec d{0.0, 2.0, true};
    const Grid g = Grid::with_cfl(d, 200);
    WaveProblem prob;
    SpatialProfile u0(200, 0.0, d);
    for (int j = 0; j <= 200; ++j) u0[j] = std::sin(pi * u0.x(j));
    prob.data.value = u0;
    const Field u = solve_forward(g, prob);
    const double exact = pi * pi / 4.0;
    double drift = 0.0;
    for (int n = 1; n < g.nt(); ++n) drift = std::max(drift, std::abs(physical_energy(u, n) - exact) / exact);
    CHECK(drift <= 1e-3);
}

TEST_CASE("the scheme is linear") {
    const DomainSpec d{0.1, 3.0};
    const Grid g = Grid::with_cfl(d, 24);
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto bundle = [&] {
        WaveProblem p;
        p.bc0 = trace_of(g, [&](double) { return u(gen); });
        p.bc1 = trace_of(g, [&](double) { return u(gen); });
        Field s(g);
        for (auto& x : s.values()) x = u(gen);
        p.source = s;
        SpatialProfile a(g.ny(), 0.0, d), b(g.ny(), 0.0, d);
        for (int j = 0; j <= g.ny(); ++j) {
            a[j] = u(gen);
            b[j] = u(gen);
        }
        (*p.bc0)[0] = a[0];
        (*p.bc1)[0] = a[g.ny()];
        p.data.value = a;
        p.data.velocity = b;
        return p;
    };
    const WaveProblem p1 = bundle();
    const WaveProblem p2 = bundle();
    WaveProblem mix;
    mix.bc0 = 2.0 * *p1.bc0 + (-0.5) * *p2.bc0;
    mix.bc1 = 2.0 * *p1.bc1 + (-0.5) * *p2.bc1;
    mix.source = 2.0 * *p1.source + (-0.5) * *p2.source;
    mix.data.value = 2.0 * *p1.data.value + (-0.5) * *p2.data.value;
    mix.data.velocity = 2.0 * *p1.data.velocity + (-0.5) * *p2.data.velocity;
    const Field lhs = solve_forward(g, mix);
    const Field rhs = 2.0 * solve_forward(g, p1) + (-0.5) * solve_forward(g, p2);
    CHECK(max_diff(lhs, rhs) <= 1e-12 * std::max(1.0, rhs.max_abs()));
}

TEST_CASE("finite speed of propagation at k = 0") {
    const DomainSpec d{0.0, 0.8, true};
    const Grid g = Grid::with_cfl(d, 200);
    WaveProblem prob;
    prob.bc0 = trace_of(g, [](double t) { return t < 0.1 ? std::pow(std::sin(pi * t / 0.1), 2) : 0.0; });
    const Field u = solve_forward(g, prob);
    double ahead = 0.0;
    for (int n = 0; n <= g.nt(); ++n)
        for (int j = 0; j <= g.ny(); ++j)
            if (g.t(n) < g.y(j) - 0.1) ahead = std::max(ahead, std::abs(u(j, n)));
    CHECK(ahead <= 1e-10);
}

TEST_CASE("time reversal at k = 0") {
    const DomainSpec d{0.0, 2.0, true};
    const Grid g = Grid::with_cfl(d, 40);
    Field s(g), mirrored(g);
    for (int n = 0; n <= g.nt(); ++n)
        for (int j = 1; j < g.ny(); ++j) {
            s(j, n) = std::sin(pi * g.y(j)) * std::cos(1.3 * g.t(n)) + g.y(j) * g.t(n);
            mirrored(j, g.nt() - n) = s(j, n);
        }
    WaveProblem back;
    back.direction = Direction::backward;
    back.source = s;
    WaveProblem fwd;
    fwd.source = mirrored;
    const Field b = solve_backward(g, back);
    const Field f = solve_forward(g, fwd);
    double m = 0.0;
    for (int n = 0; n <= g.nt(); ++n)
        for (int j = 0; j <= g.ny(); ++j) m = std::max(m, std::abs(b(j, n) - f(j, g.nt() - n)));
    CHECK(m <= 1e-10);
}

TEST_CASE("adjoint sweep is the transpose of the forward solve") {
    const Grid g = Grid::with_cfl(DomainSpec{0.2, 3.0}, 20);
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field seed(g);
    for (auto& x : seed.values()) x = u(gen);
    const AdjointSweep sw = adjoint_sweep(g, seed);
    for (int trial = 0; trial < 5; ++trial) {
        WaveProblem p;
        p.bc0 = trace_of(g, [&](double) { return u(gen); });
        const Field v = solve_forward(g, p);
        double lhs = 0.0;
        for (std::size_t i = 0; i < v.values().size(); ++i) lhs += seed.values()[i] * v.values()[i];
        double rhs = 0.0;
        for (int n = 0; n <= g.nt(); ++n) rhs += sw.grad_bc0[n] * (*p.bc0)[n];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
    }
}

TEST_CASE("final state seed pairs with the final state") {
    const DomainSpec d{0.1, 2.0};
    const Grid g = Grid::with_cfl(d, 20);
    WaveProblem p;
    p.bc0 = trace_of(g, [](double t) { return std::sin(2.0 * t) * t; });
    const Field v = solve_forward(g, p);
    const FinalState fs = final_state(v);
    std::vector<double> a(g.ny() + 1), b(g.ny() + 1);
    for (int j = 0; j <= g.ny(); ++j) {
        a[j] = std::cos(0.3 * j);
        b[j] = std::sin(0.7 * j);
    }
    const Field seed = final_state_seed(g, a, b);
    double lhs = 0.0;
    for (std::size_t i = 0; i < v.values().size(); ++i) lhs += seed.values()[i] * v.values()[i];
    double rhs = 0.0;
    for (int j = 0; j <= g.ny(); ++j) rhs += a[j] * fs.value[j] + b[j] * fs.velocity[j];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("CFL violation is a configuration error") {
    CHECK_THROWS_AS(Grid(DomainSpec{0.1, 4.0}, 40, 50), ConfigError);
}

}
