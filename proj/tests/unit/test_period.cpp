#include "combdrive/period.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace combdrive;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const auto P = ModelParams<double>::defaults();
const auto Q = ModelParams<Precise>::defaults();
} // namespace

TEST_CASE("period tends to the linearized value at small energy", "[period]") {
    const double t = period(1e-10 * P.hbar_star(), P);
    CHECK_THAT(t, WithinAbs(2 * M_PI / std::sqrt(0.75), 1e-5));
    CHECK_THAT(P.period_infimum(), WithinRel(7.2551974569368713, 1e-14));
    CHECK(t > P.period_infimum());
}

TEST_CASE("period matches the time-of-flight oracle", "[period]") {
    const double h = P.hbar_star() / 2;
    CHECK_THAT(period(h, P), WithinRel(oracle::time_of_flight_period(h, P), 1e-8));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int i = 0; i < 10; ++i) {
        const double e = u(rng) * P.hbar_star();
        CHECK_THAT(period(e, P), WithinRel(oracle::time_of_flight_period(e, P), 1e-8));
    }
}

TEST_CASE("period near the saddle loop", "[period]") {
    // Reference values from a 40-digit evaluation of the same integral.
    const std::vector<std::pair<int, double>> ref = {
        {4, 15.818}, {6, 20.423}, {8, 25.028}, {10, 29.633}};
    double prev = 0;
    for (const auto &[k, t_ref] : ref) {
        const double t = period(P.hbar_star() * (1 - std::pow(10.0, -k)), P);
        CHECK_THAT(t, WithinAbs(t_ref, 1e-3));
        CHECK(t > prev);
        prev = t;
    }
    CHECK(prev > 3 * P.period_infimum());
    // Level API reaches far below the hbar cutoff.
    const double deep = period(level_from_gap(1e-20 * P.hbar_star(), P), P);
    CHECK_THAT(deep, WithinAbs(52.659, 2e-3));
    CHECK_THROWS_AS(period(P.hbar_star() * (1 - 1e-13), P), RangeError);
    CHECK_THROWS_AS(period(0.0, P), RangeError);
    CHECK_THROWS_AS(period(0.2, P), RangeError);
}

TEST_CASE("period in quad precision agrees with double", "[period]") {
    for (double g : {0.1, 1e-4, 1e-9}) {
        const double td = period(level_from_gap(g, P), P);
        const Precise tq = period(level_from_gap(Precise(g), Q), Q);
        CHECK_THAT(td, WithinRel(static_cast<double>(tq), 1e-13));
    }
}

TEST_CASE("period derivative matches finite differences", "[period]") {
    const double h = P.hbar_star() / 2;
    const double fd = period_derivative_fd(h, 1e-6 * P.hbar_star(), P);
    CHECK_THAT(period_derivative(h, P), WithinRel(fd, 1e-6));
    for (double e : {1e-6, 1e-3, 0.05, 0.1, 0.124}) {
        CHECK(period_derivative(e, P) > 0);
    }
    // Integrand vanishes at x = 0 and the v factor is positive up to x*.
    for (int i = 0; i <= 100; ++i) {
        CHECK(derivative_weight_v(P.x_star() * i / 100.0, P) > 0);
    }
}

TEST_CASE("period inverse", "[period]") {
    const auto l1 = period_inverse(4 * M_PI, P);
    CHECK(l1.hbar > 0);
    CHECK(l1.hbar < P.hbar_star());
    CHECK_THAT(l1.hbar, WithinRel(0.12467496176297856, 1e-12));
    CHECK_THROWS_AS(period_inverse(P.period_infimum(), P), RangeError);
    CHECK_THROWS_AS(period_inverse(7.0, P), RangeError);
    for (double t : {7.3, 8.0, 10.0, 4 * M_PI, 20.0, 8 * M_PI, 10 * M_PI, 40.0}) {
        const auto lv = period_inverse(t, P);
        CHECK_THAT(period(lv, P), WithinRel(t, 1e-10));
    }
    // Quad precision reaches the n = 4 level, whose gap is far below double's
    // resolution of hbar.
    const auto l4 = period_inverse(16 * pi<Precise>(), Q);
    CHECK(l4.gap < Precise(1e-18));
    CHECK(abs(period(l4, Q) / (16 * pi<Precise>()) - 1) < Precise(1e-28));
}

TEST_CASE("admissible pairs", "[period]") {
    CHECK(max_p(1, P) == 0);
    CHECK(max_p(2, P) == 1);
    CHECK(max_p(3, P) == 2);
    CHECK(max_p(5, P) == 4);
    CHECK_FALSE(admissible(1, 1, P));
    CHECK(admissible(2, 1, P));
    CHECK(admissible(5, 4, P));
    CHECK_FALSE(admissible(5, 5, P));
    CHECK_THROWS_AS(require_admissible(1, 1, P), InadmissibleError);
    CHECK(harmonic_index(4, 1) == 2);
    CHECK(harmonic_index(4, 2) == 1);
    CHECK(harmonic_index(3, 1) == 0);
    CHECK(admissible_pairs(5, P).size() == 10);
}

TEST_CASE("period theorem verification passes at defaults", "[period][slow]") {
    const auto rep = verify_period_theorem(P, 100);
    for (const auto &c : rep.checks) {
        INFO(c.name << " measured " << c.measured);
        CHECK(c.passed);
    }
}
