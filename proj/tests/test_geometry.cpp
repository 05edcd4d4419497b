#include <doctest.h>

#include <cmath>
#include <random>

#include "hcw/errors.hpp"
#include "hcw/geometry.hpp"

using namespace hcw;

TEST_SUITE("geometry") {

TEST_CASE("alpha is the affine endpoint") {
    CHECK(alpha(DomainSpec{0.1, 4.0}, 2.0) == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(alpha(DomainSpec{0.5, 4.0}, 4.0) == doctest::Approx(3.0).epsilon(1e-15));
    for (double k : {0.05, 0.3, 0.9}) CHECK(alpha(DomainSpec{k, 5.0}, 0.0) == 1.0);
    const DomainSpec d{0.3, 10.0};
    CHECK(alpha(d, 1.5) + alpha(d, 2.5) == doctest::Approx(alpha(d, 4.0) + 1.0).epsilon(1e-15));
    CHECK_THROWS_AS(alpha(d, 11.0), DomainError);
}

TEST_CASE("cylinder coordinates") {
    const DomainSpec d{0.1, 4.0};
    CHECK(to_cylinder(0.6, 2.0, d) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(to_cylinder(0.0, 3.0, d) == 0.0);
    CHECK(to_cylinder(alpha(d, 3.0), 3.0, d) == doctest::Approx(1.0).epsilon(1e-15));
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double t = 4.0 * u(gen);
        const double x = alpha(d, t) * u(gen);
        worst = std::max(worst, std::abs(from_cylinder(to_cylinder(x, t, d), t, d) - x));
    }
    CHECK(worst <= 1e-14);
}

TEST_CASE("minimal control time") {
    // Independent evaluation in long double.
    auto oracle = [](long double k) { return std::expm1(2 * k * (1 + k) / std::pow(1 - k, 3)) / k; };
    CHECK(std::abs(min_control_time(0.1) - 3.5227) <= 1e-3);
    CHECK(min_control_time(0.1) == doctest::Approx(static_cast<double>(oracle(0.1L))).epsilon(1e-13));
    CHECK(min_control_time(0.5) == doctest::Approx(std::expm1(12.0) / 0.5).epsilon(1e-13));
    CHECK(std::abs(min_control_time(0.5) - 325507.6) <= 0.1);
    CHECK(min_control_time(1e-4) == doctest::Approx(static_cast<double>(oracle(1e-4L))).epsilon(1e-13));
    CHECK(std::abs(min_control_time(1e-8) - 2.0) <= 1e-6);
    // Strictly increasing while representable; the exponent overflows a double beyond k ~ 0.82.
    double prev = 0.0;
    for (int i = 1; i <= 18; ++i) {
        const double v = min_control_time(0.05 * i);
        if (!std::isfinite(v)) {
            CHECK(0.05 * i > 0.8);
            continue;
        }
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(min_control_time(0.0), DomainError);
    CHECK_THROWS_AS(min_control_time(1.0), DomainError);
}

TEST_CASE("admissibility report") {
    auto ok = check_admissible(DomainSpec{0.1, 4.0});
    CHECK(ok.ok);
    CHECK(ok.warnings().empty());
    auto below = check_admissible(DomainSpec{0.1, 2.0});
    CHECK(below.ok);
    CHECK(below.below_threshold);
    CHECK(below.warnings().size() == 1);
    auto bad = check_admissible(DomainSpec{1.2, 5.0});
    CHECK_FALSE(bad.ok);
    CHECK(bad.error.find("0 < k < 1") != std::string::npos);
    CHECK_THROWS_AS(DomainSpec({1.2, 5.0}).validate(), DomainError);
    auto zero = check_admissible(DomainSpec{0.0, 2.0, true});
    CHECK(zero.ok);
    CHECK(zero.k_zero_validation_only);
    CHECK_FALSE(check_admissible(DomainSpec{0.0, 2.0, false}).ok);
    CHECK_FALSE(check_admissible(DomainSpec{0.1, -1.0}).ok);
}

TEST_CASE("sigma partitions") {
    auto o = SigmaPartition::overlap(10);
    CHECK(o.mask1.size() == 11);
    for (int n = 0; n <= 10; ++n) CHECK((o.mask1[n] && o.mask2[n]));
    auto s = SigmaPartition::time_split(10, 0.4, 2.0);
    int leader = 0, follower = 0;
    for (int n = 0; n <= 10; ++n) {
        CHECK(s.mask1[n] != s.mask2[n]);
        leader += s.mask1[n];
        follower += s.mask2[n];
        CHECK(s.mask1[n] == (n * 0.4 < 2.0));
    }
    CHECK(leader == 5);
    CHECK(follower == 6);
    CHECK(partition_mode_from_string("time_split") == PartitionMode::time_split);
    CHECK_THROWS_AS(partition_mode_from_string("diagonal"), ConfigError);
}

}
