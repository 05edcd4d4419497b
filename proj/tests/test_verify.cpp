#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hcw/errors.hpp"
#include "hcw/verify.hpp"

using namespace hcw;
using std::numbers::pi;

TEST_SUITE("verify") {

TEST_CASE("d'Alembert reference") {
    auto bc = [](double t) { return std::sin(pi * t); };
    CHECK(dalembert_reference(bc, 0.25, 0.5) == doctest::Approx(std::sin(0.25 * pi)).epsilon(1e-14));
    CHECK(dalembert_reference(bc, 0.6, 0.5) == 0.0);
    for (double t : {0.3, 1.7, 2.9}) CHECK(std::abs(dalembert_reference(bc, 1.0, t)) <= 1e-14);
    // After one reflection from x = 1 the wave returns with opposite sign.
    CHECK(dalembert_reference(bc, 0.8, 1.5) == doctest::Approx(std::sin(pi * 0.7) - std::sin(pi * 0.3)).epsilon(1e-14));
}

TEST_CASE("monolithic solve of zero data") {
    FollowerConfig cfg(Grid::with_cfl(DomainSpec{0.1, 4.0}, 16));
    const auto r = monolithic_solve(CoupledSystem::nash, cfg, MonolithicInputs{});
    CHECK(r.state.max_abs() == 0.0);
    CHECK(r.adjoint.max_abs() == 0.0);
    FollowerConfig big(Grid::with_cfl(DomainSpec{0.1, 4.0}, 65));
    CHECK_THROWS_AS(monolithic_solve(CoupledSystem::nash, big, MonolithicInputs{}), ConfigError);
}

TEST_CASE("transpose check and its negative control") {
    FollowerConfig cfg(Grid::with_cfl(DomainSpec{0.1, 4.0}, 41));
    const auto ok = transpose_check(cfg);
    CHECK(ok.errors.size() == 20);
    CHECK(ok.max_relative_error <= 1e-8);
    TransposeCheckOptions neg;
    neg.trials = 5;
    neg.drop_jacobian = true;
    CHECK(transpose_check(cfg, neg).max_relative_error > 1e-3);
    CHECK_THROWS_AS(transpose_check(cfg, {0, 1, 0.0, false}), ConfigError);
}

TEST_CASE("observed orders") {
    for (const auto& oc : {dalembert_case(), self_convergence_case(0.1)}) {
        const auto rows = convergence_study(oc);
        REQUIRE(rows.size() >= 3);
        for (const auto& r : rows)
            if (r.order) CHECK(std::abs(*r.order - 2.0) <= 0.3);
    }
    for (double k : {0.0, 0.1})
        for (const auto& r : convergence_study(linear_case(k))) CHECK(r.error <= 1e-12);
}

TEST_CASE("seeded randomness is reproducible") {
    UniformStream a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.next();
        CHECK(x == b.next());
        CHECK((x >= -1.0 && x < 1.0));
        differs = differs || x != c.next();
    }
    CHECK(differs);
    const auto r1 = run_verification(VerifyLevel::fast, 9);
    const auto r2 = run_verification(VerifyLevel::fast, 9);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].value == r2[i].value);
        CHECK(r1[i].passed);
    }
    CHECK(verification_report_json(r1) == verification_report_json(r2));
}

TEST_CASE("check helper") {
    CHECK(make_check("a", "m", 1.0, 2.0).passed);
    CHECK_FALSE(make_check("a", "m", 3.0, 2.0).passed);
    CHECK(make_check("a", "m", 3.0, 2.0, false).passed);
    CHECK_THROWS_AS(verify_level_from_string("medium"), ConfigError);
}

}
