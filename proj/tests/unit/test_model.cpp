#include "combdrive/model.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace combdrive;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const auto P = ModelParams<double>::defaults();
const DriveSpec<double> D0{};
} // namespace

TEST_CASE("model parameters derive the saddle quantities", "[model]") {
    CHECK_THAT(P.omega0(), WithinRel(1.0, 1e-15));
    CHECK_THAT(P.coupling(), WithinRel(0.25, 1e-15));
    CHECK_THAT(P.x_star(), WithinRel(std::sqrt(0.5), 1e-15));
    CHECK_THAT(P.hbar_star(), WithinRel(0.125, 1e-14));
    CHECK_THAT(P.v_star(), WithinRel(1.0, 1e-15));
    CHECK_THAT(P.hbar_star(), WithinRel(energy(P.x_star(), P), 1e-14));
}

TEST_CASE("model parameters reject the pull-in regime", "[model]") {
    CHECK_THROWS_AS(ModelParams<double>(0.25, 1.0, 1.0), InvalidParameters);
    CHECK_THROWS_AS(ModelParams<double>(0.25, 1.5, 1.0), InvalidParameters);
    CHECK_THROWS_AS(ModelParams<double>(-1.0, 0.5, 1.0), InvalidParameters);
    CHECK_THROWS_AS(ModelParams<double>(0.25, 0.5, 0.0), InvalidParameters);
}

TEST_CASE("drive amplitude is bounded by the voltage floor", "[model]") {
    const DriveSpec<double> d(0.4);
    CHECK_THAT(d.p_min(), WithinAbs(-1.0, 1e-15));
    CHECK_THAT(d.max_delta(P), WithinRel(0.5, 1e-15));
    CHECK_NOTHROW(d.validate(P));
    CHECK_THROWS_AS(DriveSpec<double>(0.5).validate(P), InvalidParameters);
    CHECK_THROWS_AS(DriveSpec<double>(-0.1), InvalidParameters);

    // Two harmonics: compare against a brute-force sample of the profile.
    const DriveSpec<double> two(0.1, {1.0, 0.5});
    double m = 1e9;
    for (int k = 0; k < 200000; ++k) {
        const double t = 2 * M_PI * k / 200000.0;
        m = std::min(m, std::cos(t) + 0.5 * std::cos(2 * t));
    }
    CHECK_THAT(two.p_min(), WithinAbs(m, 1e-9));
}

TEST_CASE("force matches direct evaluation", "[model]") {
    CHECK(force(0.0, 0.3, P, DriveSpec<double>(0.2)) == 0.0);
    CHECK_THAT(force(std::sqrt(0.5), 0.0, P, D0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(force(0.5, 0.0, P, D0), WithinRel(0.5 * (1.0 - 0.25 / 0.5625), 1e-14));
    CHECK_THROWS_AS(force(1.0, 0.0, P, D0), DomainError);
    CHECK_THROWS_AS(force(-1.2, 0.0, P, D0), DomainError);
}

TEST_CASE("force symmetries hold on random samples", "[model][property]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> ux(-0.95, 0.95), ut(-20.0, 20.0), ud(0.0, 0.49);
    for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng), t = ut(rng);
        const DriveSpec<double> d(ud(rng));
        const double f = force(x, t, P, d);
        const double scale = std::max(1.0, std::abs(f));
        CHECK(std::abs(force(-x, t, P, d) + f) <= 1e-14 * scale);
        CHECK(std::abs(force(x, -t, P, d) - f) <= 1e-14 * scale);
        CHECK(std::abs(force(x, t + P.tv(), P, d) - f) <= 1e-13 * scale);
    }
}

TEST_CASE("restoring force points to the center inside the saddle loop", "[model][property]") {
    for (int i = 1; i < 1000; ++i) {
        const double x = P.x_star() * i / 1000.0;
        CHECK(x * force_autonomous(x, P) > 0.0);
        CHECK(-x * force_autonomous(-x, P) > 0.0);
    }
}

TEST_CASE("dforce_dx agrees with finite differences", "[model][property]") {
    CHECK_THAT(dforce_dx(0.0, 0.0, P, D0), WithinRel(0.75, 1e-15));
    CHECK(dforce_dx(P.x_star(), 0.0, P, D0) < 0.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(-0.9, 0.9), ut(0.0, 7.0), ud(0.0, 0.4);
    for (int i = 0; i < 500; ++i) {
        const double x = ux(rng), t = ut(rng);
        const DriveSpec<double> d(ud(rng));
        const double fd =
            oracle::central_diff([&](double s) { return force(s, t, P, d); }, x, 1e-6);
        const double an = dforce_dx(x, t, P, d);
        CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(an)));
    }
}

TEST_CASE("energy values and monotonicity", "[model]") {
    CHECK(energy(0.0, P) == 0.0);
    CHECK_THAT(energy(std::sqrt(0.5), P), WithinRel(0.125, 1e-14));
    CHECK_THAT(energy(0.5, P), WithinRel(0.125 - 0.125 / 0.75 + 0.125, 1e-14));
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double x = P.x_star() * i / 1000.0;
        const double e = energy(x, P);
        CHECK(e == energy(-x, P));
        CHECK(e > prev);
        prev = e;
        CHECK_THAT(e, WithinAbs(static_cast<double>(oracle::raw_energy(x, 0.25, 0.5)), 1e-15));
        CHECK_THAT(energy_gap(x, P), WithinAbs(P.hbar_star() - e, 1e-15));
    }
    CHECK_THROWS_AS(energy(1.0, P), DomainError);
}

TEST_CASE("hamiltonian reference values", "[model]") {
    CHECK(hamiltonian(0.0, 0.0, P) == 0.0);
    CHECK_THAT(hamiltonian(P.x_star(), 0.0, P), WithinRel(P.hbar_star(), 1e-14));
    CHECK_THAT(hamiltonian(0.0, 0.3, P), WithinRel(0.045, 1e-15));
}

TEST_CASE("equilibria and pull-in flag", "[model]") {
    const auto eq = equilibria(0.25, 0.5);
    REQUIRE(eq.points.size() == 3);
    CHECK_FALSE(eq.pull_in);
    CHECK_THAT(eq.v_star, WithinRel(1.0, 1e-15));
    CHECK(eq.points[0].kind == EquilibriumKind::Center);
    CHECK(eq.points[1].kind == EquilibriumKind::Saddle);
    CHECK(eq.points[2].kind == EquilibriumKind::Saddle);
    CHECK_THAT(eq.points[2].x, WithinRel(std::sqrt(0.5), 1e-15));
    for (const auto &pt : eq.points) {
        CHECK_THAT(force_autonomous(pt.x, P), WithinAbs(0.0, 1e-12));
    }
    const auto pulled = equilibria(0.25, 1.0);
    CHECK(pulled.pull_in);
    CHECK(pulled.points.size() == 1);

    for (double v0 : {0.1, 0.3, 0.7, 0.95}) {
        const ModelParams<double> p(0.25, v0, 1.0);
        const auto e = equilibria(p);
        CHECK_THAT(force_autonomous(e.points[2].x, p), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("turning point solves E(x) = hbar", "[model]") {
    CHECK_THAT(turning_point(P.hbar_star(), P), WithinRel(P.x_star(), 1e-15));
    const double half = turning_point(P.hbar_star() / 2, P);
    CHECK_THAT(half, WithinAbs(oracle::bisect_turning_point(0.0625, 0.25, 0.5), 1e-14));
    CHECK(std::abs(energy(half, P) - 0.0625) <= 1e-13);
    double prev = 1.0;
    for (double h = 0.1; h > 1e-12; h /= 10) {
        const double xp = turning_point(h, P);
        CHECK(xp < prev);
        CHECK(std::abs(energy(xp, P) - h) <= 1e-13 * std::max(h, 1e-3));
        prev = xp;
    }
    CHECK_THROWS_AS(turning_point(0.0, P), RangeError);
    CHECK_THROWS_AS(turning_point(0.2, P), RangeError);
}

TEST_CASE("gap-based levels stay accurate next to the separatrix", "[model]") {
    const auto Q = ModelParams<Precise>::defaults();
    for (double g : {1e-3, 1e-6, 1e-9, 1e-12, 1e-15}) {
        const auto lv = level_from_gap(g, P);
        const auto lq = level_from_gap(Precise(g), Q);
        CHECK_THAT(lv.x_plus, WithinRel(static_cast<double>(lq.x_plus), 1e-15));
        CHECK_THAT(lv.d_plus, WithinRel(static_cast<double>(lq.d_plus), 1e-14));
        CHECK_THAT(static_cast<double>(energy_gap(lq.x_plus, Q)), WithinRel(g, 1e-12));
    }
}
