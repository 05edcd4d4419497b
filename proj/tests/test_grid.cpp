#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hcw/errors.hpp"
#include "hcw/grid.hpp"

using namespace hcw;
using std::numbers::pi;

namespace {

SpatialProfile profile(int ny, double time, const DomainSpec& d, auto fn) {
    SpatialProfile f(ny, time, d);
    for (int j = 0; j <= ny; ++j) f[j] = fn(f.x(j));
    return f;
}

SpatialProfile random_h10(int ny, const DomainSpec& d, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SpatialProfile f(ny, d.T, d);
    for (int j = 1; j < ny; ++j) f[j] = u(gen);
    return f;
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("grid invariants") {
    const DomainSpec d{0.1, 4.0};
    const Grid g = Grid::with_cfl(d, 41);
    CHECK(g.dt() <= 0.8 * g.dy() / 1.1 + 1e-15);
    CHECK_THROWS_AS(Grid(d, 41, g.nt() - 1), ConfigError);
    CHECK_THROWS_AS(Grid(d, 4, 100), ConfigError);
    CHECK_THROWS_AS(Grid(d, 41, 4), ConfigError);
}

TEST_CASE("L2 norm") {
    const DomainSpec d{0.1, 4.0};
    const auto one = profile(50, 2.0, d, [](double) { return 1.0; });
    CHECK(l2_norm_physical(one) == doctest::Approx(std::sqrt(1.2)).epsilon(1e-12));
    CHECK(l2_norm_physical(SpatialProfile(50, 2.0, d)) == 0.0);
    const DomainSpec d1{0.1, 4.0};
    const auto s = profile(200, 0.0, d1, [](double x) { return std::sin(pi * x); });
    CHECK(l2_norm_physical(s) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
}

TEST_CASE("H1_0 norm") {
    const DomainSpec d{0.1, 4.0};
    const auto s = profile(400, 0.0, d, [](double x) { return std::sin(pi * x); });
    CHECK(h10_norm_physical(s) == doctest::Approx(pi / std::sqrt(2.0)).epsilon(1e-4));
    CHECK(h10_norm_physical(SpatialProfile(40, 0.0, d)) == 0.0);
    std::mt19937_64 gen(5);
    const auto r = random_h10(40, d, gen);
    CHECK(h10_norm_physical(3.0 * r) == doctest::Approx(3.0 * h10_norm_physical(r)).epsilon(1e-13));
    auto bad = s;
    bad[0] = 1.0;
    CHECK_THROWS_AS(h10_norm_physical(bad), PreconditionError);
}

TEST_CASE("H-1 norm") {
    const DomainSpec d{0.1, 4.0};
    const auto s = profile(400, 0.0, d, [](double x) { return std::sin(pi * x); });
    CHECK(hminus1_norm_physical(s) == doctest::Approx(1.0 / (pi * std::sqrt(2.0))).epsilon(1e-4));
    const auto one = profile(400, 0.0, d, [](double) { return 1.0; });
    CHECK(hminus1_norm_physical(one) == doctest::Approx(1.0 / std::sqrt(12.0)).epsilon(1e-4));
    CHECK(hminus1_norm_physical(SpatialProfile(40, 0.0, d)) == 0.0);

    // Second-order consistency: error ratio near 4 per halving against the closed form.
    const double exact = 1.0 / std::sqrt(12.0);
    auto err = [&](int ny) {
        return std::abs(hminus1_norm_physical(profile(ny, 0.0, d, [](double) { return 1.0; })) - exact);
    };
    const double ratio = err(40) / err(80);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("duality pairing") {
    const DomainSpec d{0.1, 4.0};
    const auto s = profile(400, 0.0, d, [](double x) { return std::sin(pi * x); });
    CHECK(duality_pairing(s, s) == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(duality_pairing(s, SpatialProfile(400, 0.0, d)) == 0.0);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        SpatialProfile f(30, d.T, d);
        for (int j = 0; j <= 30; ++j) f[j] = u(gen);
        const auto g = random_h10(30, d, gen);
        const double bound = hminus1_norm_physical(f) * h10_norm_physical(g);
        CHECK(std::abs(duality_pairing(f, g)) <= bound * (1.0 + 1e-10) + 1e-14);
    }
}

TEST_CASE("norms are homogeneous and subadditive") {
    const DomainSpec d{0.1, 4.0};
    std::mt19937_64 gen(21);
    for (int i = 0; i < 20; ++i) {
        const auto a = random_h10(25, d, gen);
        const auto b = random_h10(25, d, gen);
        for (auto norm : {l2_norm_physical, h10_norm_physical, hminus1_norm_physical}) {
            CHECK(norm(-2.5 * a) == doctest::Approx(2.5 * norm(a)).epsilon(1e-13));
            CHECK(norm(a + b) <= norm(a) + norm(b) + 1e-14);
        }
    }
}

TEST_CASE("Riesz map round trip") {
    const DomainSpec d{0.1, 4.0};
    std::mt19937_64 gen(8);
    const auto v = random_h10(30, d, gen);
    const auto back = poisson_solve(dirichlet_laplacian(v));
    for (int j = 0; j <= 30; ++j) CHECK(back[j] == doctest::Approx(v[j]).epsilon(1e-12));
    CHECK(hminus1_norm_physical(dirichlet_laplacian(v)) == doctest::Approx(h10_norm_physical(v)).epsilon(1e-12));
}

TEST_CASE("trace quadrature and masks") {
    const Grid g(DomainSpec{0.1, 4.0}, 10, 80);
    Trace one(g);
    for (auto& v : one.values()) v = 1.0;
    CHECK(0.5 * one.inner(one) == doctest::Approx(2.0).epsilon(1e-14));
    std::vector<bool> mask(81, false);
    for (int n = 0; n < 10; ++n) mask[n] = true;
    one.restrict_to(mask);
    for (int n = 10; n <= 80; ++n) CHECK(one[n] == 0.0);
}

TEST_CASE("CSV round trip") {
    const Grid g(DomainSpec{0.1, 4.0}, 10, 80);
    Trace tr(g);
    for (int n = 0; n <= 80; ++n) tr[n] = std::sin(0.3 * n);
    std::stringstream ss;
    write_trace_csv(ss, tr, {"note"});
    CHECK(ss.str().rfind("# note\n", 0) == 0);
    const Trace back = read_trace_csv(ss, g);
    for (int n = 0; n <= 80; ++n) CHECK(back[n] == doctest::Approx(tr[n]).epsilon(1e-14));
    CHECK(format_exact(0.1) == "0.10000000000000001");
}

}
