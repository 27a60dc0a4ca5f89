#include "combdrive/firstorder.hpp"
#include "combdrive/orbits.hpp"

#include "oracles.hpp"

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

TEST_CASE("G and F23 at the zero crossing", "[firstorder]") {
    CHECK_THAT(g_function(0.0, P), WithinAbs(0.5, 1e-15));
    CHECK(f23(0.0, 0.7, P) == 0.0);
    CHECK(f23(0.4, 0.0, P) == 0.0);
    CHECK_THROWS_AS(g_function(1.0, P), DomainError);
}

TEST_CASE("F23 matches a mixed difference of the force", "[firstorder]") {
    const double h = 1e-5;
    for (double x : {-0.6, -0.2, 0.3, 0.65}) {
        for (double t : {0.3, 1.1, 2.5, 4.0}) {
            // Raw force in extended precision, which also accepts negative
            // amplitudes.
            auto F = [&](long double tt, long double dd) {
                const long double X = x;
                const long double v = 0.5L + dd * std::cos(tt);
                const long double y = 1 - X * X;
                return X * (1 - 4 * 0.25L * v * v / (y * y));
            };
            const long double H = h;
            const double mixed = static_cast<double>(
                (F(t + H, H) - F(t + H, -H) - F(t - H, H) + F(t - H, -H)) / (4 * H * H));
            CHECK_THAT(f23(x, t, P), WithinRel(mixed, 1e-6));
        }
    }
}

TEST_CASE("G'' from the cubic matches differences of G on an orbit", "[firstorder]") {
    const auto o = odd_orbit(2, 1, Q);
    const auto sol = integrate_orbit(o, Precise(-1), Precise(8));
    const Precise h = Precise(1e-7);
    for (double t : {0.2, 1.0, 2.0, 3.0}) {
        const Precise tt(t);
        auto G = [&](const Precise &s) { return g_function(sol.at(s)[0], Q); };
        const Precise fd = (G(tt + h) - 2 * G(tt) + G(tt - h)) / (h * h);
        CHECK_THAT(d(g_second_derivative(sol.at(tt)[0], o.hbar(), Q)), WithinAbs(d(fd), 1e-10));
    }
}

TEST_CASE("G_n along the odd orbit is even, nTv-periodic and increasing", "[firstorder]") {
    for (int n = 1; n <= 2; ++n) {
        const auto o = odd_orbit(2 * n, 1, Q);
        const Precise ntv = Precise(n) * Q.tv();
        const auto sol = integrate_orbit(o, -ntv, 2 * ntv);
        auto G = [&](const Precise &t) { return g_function(sol.at(t)[0], Q); };
        double sym = 0, slope_min = 1e300;
        for (int k = 0; k <= 200; ++k) {
            const Precise t = ntv * Precise(k) / 200;
            sym = std::max(sym, d(abs(G(ntv - t) - G(t))));
            sym = std::max(sym, d(abs(G(-t) - G(t))));
            if (k > 0 && k < 100) {
                const auto y = sol.at(t);
                slope_min = std::min(slope_min, d(g_rate(y[0], y[1], Q)));
            }
        }
        CHECK(sym <= 1e-8);
        CHECK(slope_min > 0);
    }
}

TEST_CASE("phase-arc quadrature reproduces the period and orbit averages", "[firstorder]") {
    const auto level = period_inverse(4 * P.tv(), P);
    const PhaseArc<double> arc(level, P);
    const auto one = arc.window(Symmetry::Odd, 1, [](double, double, double) { return 1.0; });
    CHECK_THAT(one.value, WithinRel(4 * P.tv(), 1e-12));
    CHECK_THAT(one.period, WithinRel(4 * P.tv(), 1e-12));
    // int x' dt over a period vanishes; int x'^2 dt = 2 int (hbar - E(x)) dt.
    const auto v = arc.window(Symmetry::Even, 1, [](double, double xd, double) { return xd; });
    CHECK(std::abs(v.value) <= 1e-12 * v.magnitude);
    // Time spent at x > 0 is half the period for both symmetries.
    for (auto s : {Symmetry::Odd, Symmetry::Even}) {
        const auto pos = arc.window(s, 1, [](double x, double, double) { return x > 0 ? 1.0 : 0.0; });
        CHECK_THAT(pos.value, WithinRel(2 * P.tv(), 1e-12));
    }
}

TEST_CASE("cosine-form tau' against a trajectory-based oracle", "[firstorder]") {
    // Simpson's rule on the integrated (2,1) orbit and a centered
    // difference of the time-of-flight period give an independent value.
    const auto o = odd_orbit(2, 1, Q);
    const Precise T = o.minimal_period;
    const auto sol = integrate_orbit(o, Precise(0), T);
    const int N = 20000;
    Precise acc = 0;
    for (int k = 0; k <= N; ++k) {
        const Precise t = T * Precise(k) / N;
        const Precise w = (k == 0 || k == N) ? 1 : (k % 2 ? 4 : 2);
        acc += w * g_function(sol.at(t)[0], Q) * cos(t);
    }
    const double integral = d(acc * T / (3 * N));
    const double h = d(o.hbar());
    const double dT = (oracle::time_of_flight_period(h * (1 + 1e-6), P) -
                       oracle::time_of_flight_period(h * (1 - 1e-6), P)) /
                      (2e-6 * h);
    const double expected = dT * integral;  // omega0 = 1, p = 1
    const auto tp = tau_prime_odd(2, 1, P);
    CHECK_THAT(tp.value(), WithinRel(expected, 1e-5));
    CHECK(tp.value() < 0);
}

TEST_CASE("trace-derivative methods agree", "[firstorder]") {
    for (int n = 1; n <= 4; ++n) {
        const auto odd = tau_prime_odd(2 * n, 1, P);
        const auto even = tau_prime_even(2 * n, 1, P);
        REQUIRE(odd.quarter.has_value());
        REQUIRE(even.quarter.has_value());
        CHECK(odd.n == n);
        CHECK_FALSE(odd.delicate);
        CHECK(odd.spread() <= 1e-8);
        CHECK(even.spread() <= 1e-8);
        const double sign = n % 2 ? -1.0 : 1.0;
        CHECK_THAT(even.value(), WithinRel(sign * odd.value(), 1e-8));
        CHECK_THAT(*odd.quarter, WithinRel(4 * odd.period_derivative * a_coefficient(n, P), 1e-10));
    }
}

TEST_CASE("trace derivative vanishes in the delicate cases", "[firstorder]") {
    int delicate = 0;
    for (auto [m, p] : admissible_pairs(5, P)) {
        for (auto s : {Symmetry::Odd, Symmetry::Even}) {
            const auto tp = tau_prime(s, m, p, P);
            CHECK(tp.delicate == (m % (2 * p) != 0));
            if (tp.delicate) {
                ++delicate;
                CHECK(tp.relative_size() <= 1e-8);
                CHECK_FALSE(tp.quarter.has_value());
            } else {
                CHECK(tp.relative_size() > 1e-3);
            }
        }
    }
    CHECK(delicate == 14);
}

TEST_CASE("p > 1 with m = 2np has the p = 1 sign", "[firstorder]") {
    const auto a = tau_prime_odd(2, 1, P);
    const auto b = tau_prime_odd(4, 2, P);
    CHECK(b.n == 1);
    CHECK(b.spread() <= 1e-8);
    CHECK((a.value() < 0) == (b.value() < 0));
}

TEST_CASE("theorem predictions", "[firstorder]") {
    CHECK(frequency_condition(1, P));
    CHECK_FALSE(frequency_condition(1, ModelParams<double>(0.25, 0.5, 0.5)));
    CHECK(predict_stability(Symmetry::Odd, 2, 1, P).kind == StabilityKind::Elliptic);
    CHECK(predict_stability(Symmetry::Odd, 4, 1, P).kind == StabilityKind::Hyperbolic);
    CHECK(predict_stability(Symmetry::Even, 2, 1, P).kind == StabilityKind::Hyperbolic);
    const auto del = predict_stability(Symmetry::Odd, 3, 1, P);
    CHECK(del.kind == StabilityKind::Undetermined);
    CHECK(del.source == VerdictSource::TheoremPrediction);
    CHECK_THROWS_AS(predict_stability(Symmetry::Odd, 1, 1, P), InadmissibleError);
    const auto fo = first_order_stability(tau_prime_odd(2, 1, P));
    CHECK(fo.kind == StabilityKind::Elliptic);
    CHECK(fo.source == VerdictSource::FirstOrderCriterion);
    CHECK(first_order_stability(tau_prime_odd(3, 1, P)).kind == StabilityKind::Undetermined);
}

TEST_CASE("convexity certificate internals", "[firstorder]") {
    for (int n = 1; n <= 2; ++n) {
        const auto c = convexity_certificate(n, Q);
        CHECK(c.u_at_zero_error <= 1e-12);
        CHECK(c.u_at_one_error <= 1e-12);
        CHECK(c.y1_error <= 1e-10);
        // The other root of the quadratic is not the turning point.
        CHECK(std::abs(c.y1_alternate - c.y1_turning) > 1e-12);
        CHECK(c.g2_mismatch <= 1e-8);
        CHECK(c.u_argmin >= c.y1);
        CHECK(c.grid == 1000);
        // The certificate's own verdict follows its measurements.
        CHECK(c.convex() == (c.u_min > 0 && c.g2_min >= 0));
    }
}
