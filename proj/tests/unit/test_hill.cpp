#include "combdrive/hill.hpp"
#include "combdrive/orbits.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace combdrive;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const auto P = ModelParams<double>::defaults();
const auto Q = ModelParams<Precise>::defaults();
double d(const Precise &x) { return static_cast<double>(x); }
} // namespace

TEST_CASE("trace classification", "[hill]") {
    CHECK(classify(1.5).kind == StabilityKind::Elliptic);
    CHECK(classify(-1.5).kind == StabilityKind::Elliptic);
    CHECK(classify(2.3).kind == StabilityKind::Hyperbolic);
    CHECK(classify(-2.3).kind == StabilityKind::Hyperbolic);
    CHECK(classify(2 + 0.5e-9).kind == StabilityKind::Parabolic);
    CHECK(classify(2 - 0.5e-9).kind == StabilityKind::Parabolic);
    CHECK(classify(2.0, 1e-3).source == VerdictSource::NumericalTrace);
    CHECK_THROWS_AS(classify(1.0, 0.0), InvalidParameters);
}

TEST_CASE("Hill potential along the equilibrium and along an orbit", "[hill]") {
    const DriveSpec<double> d0{};
    const auto rest = integrate_orbit(P, d0, State<double, 2>{0.0, 0.0}, 0.0, 10.0);
    const auto q0 = hill_potential(rest, d0, P);
    for (double t : {0.0, 1.0, 5.5, 10.0}) CHECK_THAT(q0(t), WithinRel(0.75, 1e-15));

    const auto o = odd_orbit(2, 1, Q);
    const DriveSpec<Precise> dq{};
    const Precise T = o.minimal_period;
    const auto sol = integrate_orbit(Q, dq, o.initial_state(), -T, T);
    const auto q = hill_potential(sol, dq, Q);
    for (int k = 0; k <= 50; ++k) {
        const Precise t = T / 2 * Precise(k) / 50;
        CHECK(d(abs(q(-t) - q(t))) <= 1e-20);
        CHECK(d(abs(q(t + T / 2) - q(t))) <= 1e-20);
    }
}

TEST_CASE("constant-coefficient monodromy has the closed-form trace", "[hill]") {
    const auto m = monodromy(State<double, 2>{0.0, 0.0}, DriveSpec<double>{}, P, 2);
    CHECK_THAT(m.trace, WithinAbs(2 * std::cos(2 * P.tv() * std::sqrt(0.75)), 1e-12));
    CHECK_THAT(m.determinant, WithinAbs(1.0, 1e-12));
}

TEST_CASE("the resting state under forcing: two monodromy paths agree", "[hill]") {
    // x = 0 solves the forced equation, leaving a Mathieu-type Hill equation.
    const DriveSpec<double> drive(0.1);
    const State<double, 2> rest{0.0, 0.0};
    const auto a = monodromy(rest, drive, P, 3);
    const auto b = monodromy_matrix_flow(rest, drive, P, 3, 1e-13, 1e-14);
    CHECK_THAT(a.trace, WithinAbs(b.trace, 1e-9));
    CHECK_THAT(a.psi2_T, WithinAbs(b.psi2_T, 1e-9));
    CHECK_THAT(a.dpsi1_T, WithinAbs(b.dpsi1_T, 1e-9));
}

TEST_CASE("monodromy of the (2,1) orbit by two code paths", "[hill]") {
    const auto o = odd_orbit(2, 1, Q);
    const DriveSpec<Precise> dq{};
    const auto a = monodromy(o.initial_state(), dq, Q, 2);
    const auto b = monodromy_matrix_flow(o.initial_state(), dq, Q, 2, Precise(1e-20), Precise(1e-22));
    CHECK(d(abs(a.trace - b.trace)) <= 1e-9);
    CHECK(d(abs(a.trace - 2)) <= 1e-20);
    CHECK(d(abs(a.determinant - 1)) <= 1e-20);
}

TEST_CASE("autonomous trace approaches 2 as the integrator tightens", "[hill]") {
    const auto o = odd_orbit(2, 1, Q);
    const State<double, 2> y0{0.0, d(o.init)};
    double prev = 1.0;
    for (double tol : {1e-7, 1e-9, 1e-11}) {
        const auto m = monodromy_matrix_flow(y0, DriveSpec<double>{}, P, 2, tol, tol * 1e-2);
        const double dev = std::abs(m.trace - 2.0);
        CHECK(dev < prev);
        prev = dev;
    }
}

TEST_CASE("non-periodic base states are rejected", "[hill]") {
    CHECK_THROWS_AS(monodromy(State<double, 2>{0.0, 0.3}, DriveSpec<double>{}, P, 2),
                    PeriodicityError);
}

TEST_CASE("autonomous traces and Wronskians for all admissible orbits", "[hill][slow]") {
    for (const auto &[m, p] : admissible_pairs(5, Q)) {
        for (auto sym : {Symmetry::Odd, Symmetry::Even}) {
            const auto o = make_orbit(sym, m, p, Q);
            const auto mono = monodromy(o.initial_state(), DriveSpec<Precise>{}, Q, m);
            INFO("m=" << m << " p=" << p << " " << to_string(sym) << " trace " << d(mono.trace));
            CHECK(d(abs(mono.trace - 2)) <= 1e-6);
            CHECK(d(abs(mono.determinant - 1)) <= 1e-8);
            for (const auto &w : wronskian_profile(o.initial_state(), DriveSpec<Precise>{}, Q, m)) {
                CHECK(d(abs(w - 1)) <= 1e-8);
            }
        }
    }
}
