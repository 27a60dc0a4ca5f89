#include "combdrive/continuation.hpp"
#include "combdrive/firstorder.hpp"

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

TEST_CASE("shooting at delta = 0 returns the autonomous orbit", "[continuation]") {
    for (auto s : {Symmetry::Odd, Symmetry::Even}) {
        const auto base = make_orbit<Precise>(s, 2, 1, Q);
        const auto o = shoot(s, 2, 1, DriveSpec<Precise>{}, Q, base.init);
        CHECK(d(abs(o.init - base.init)) <= 1e-25);
        CHECK_THAT(d(o.trace()), WithinAbs(2.0, 1e-20));
    }
}

TEST_CASE("forced odd and even orbits close over the window", "[continuation]") {
    for (auto s : {Symmetry::Odd, Symmetry::Even}) {
        const auto o = forced_orbit<Precise>(s, 2, 1, Precise(1e-4), Q);
        CHECK(d(o.shooting_residual) <= 1e-10);
        CHECK(d(o.return_residual) <= 1e-8);
        CHECK_THAT(d(o.monodromy.determinant), WithinAbs(1.0, 1e-20));
        // Independent check of periodicity with a separate Runge-Kutta run.
        const DriveSpec<double> drive(1e-4);
        const auto y0 = o.initial_state();
        const State<double, 2> s0{d(y0[0]), d(y0[1])};
        const auto sol = numerics::integrate_ivp(CombField<double>{P, drive}, s0, 0.0,
                                                 2 * P.tv(), 1e-12, 1e-13);
        CHECK_THAT(sol.final_state()[0], WithinAbs(s0[0], 1e-7));
        CHECK_THAT(sol.final_state()[1], WithinAbs(s0[1], 1e-7));
    }
}

TEST_CASE("forced odd orbit keeps its symmetry", "[continuation]") {
    const auto o = forced_orbit<Precise>(Symmetry::Odd, 2, 1, Precise(5e-4), Q);
    const DriveSpec<Precise> drive(Precise(5e-4));
    const Precise T = 2 * Q.tv();
    const auto sol = integrate_orbit(Q, drive, o.initial_state(), -T, T);
    for (int k = 1; k <= 20; ++k) {
        const Precise t = T * Precise(k) / 20;
        CHECK(d(abs(sol.at(-t)[0] + sol.at(t)[0])) <= 1e-20);
        CHECK(d(abs(sol.at(T - t)[0] + sol.at(t)[0])) <= 1e-20);
    }
}

TEST_CASE("shooting rejects a solution on another branch", "[continuation]") {
    // eta = 0 is the rest state, which solves the odd problem but has no
    // zero crossing inside the half window of the (4,2) orbit.
    CHECK_THROWS_AS(solve_shooting(Symmetry::Odd, 4, 2, DriveSpec<Precise>(Precise(1e-3)), Q,
                                   Precise(0)),
                    ConvergenceError);
}

TEST_CASE("continuation over the default grid", "[continuation]") {
    std::vector<Precise> grid;
    for (double v : default_delta_grid()) grid.push_back(v);
    const auto fam = continue_family<Precise>(Symmetry::Even, 2, 1, Q, grid);
    REQUIRE(fam.complete);
    REQUIRE(fam.points.size() == grid.size());
    CHECK_THAT(d(fam.points[0].orbit.trace()), WithinAbs(2.0, 1e-12));
    for (std::size_t k = 1; k < fam.points.size(); ++k) {
        const auto &o = fam.points[k].orbit;
        CHECK(d(o.shooting_residual) <= 1e-10);
        CHECK(d(o.return_residual) <= 1e-8);
        CHECK(fam.points[k].verdict.source == VerdictSource::NumericalTrace);
    }
}

TEST_CASE("continuation is deterministic and resumable", "[continuation]") {
    const std::vector<Precise> grid{Precise(0), Precise(1e-4), Precise(2e-4), Precise(5e-4)};
    const auto full = continue_family<Precise>(Symmetry::Odd, 2, 1, Q, grid);
    const auto again = continue_family<Precise>(Symmetry::Odd, 2, 1, Q, grid);
    REQUIRE(full.complete);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(full.points[k].orbit.init == again.points[k].orbit.init);
        CHECK(full.points[k].orbit.trace() == again.points[k].orbit.trace());
    }
    const ResumePoint<Precise> rp{full.points[1].orbit.delta, full.points[1].orbit.init};
    const auto rest = continue_family(Symmetry::Odd, 2, 1, Q, grid, ContinuationOptions<Precise>{},
                                      std::optional(rp), [](const FamilyPoint<Precise> &) {});
    REQUIRE(rest.points.size() == 2);
    CHECK(d(abs(rest.points[0].orbit.trace() - full.points[2].orbit.trace())) <= 1e-20);
    CHECK(d(abs(rest.points[1].orbit.trace() - full.points[3].orbit.trace())) <= 1e-20);
}

TEST_CASE("continuation stops cleanly when a step cannot be taken", "[continuation]") {
    ContinuationOptions<Precise> opt;
    opt.max_halvings = 0;
    opt.seed_from_shift = false;
    const auto fam = continue_family<Precise>(Symmetry::Odd, 4, 1, Q,
                                              {Precise(0), Precise(1e-3)}, opt);
    CHECK_FALSE(fam.complete);
    REQUIRE(fam.failed_delta.has_value());
    CHECK(*fam.failed_delta == 1e-3);
    CHECK(fam.points.size() == 1);
    CHECK_FALSE(fam.failure.empty());
}

TEST_CASE("invalid grids are rejected", "[continuation]") {
    CHECK_THROWS_AS(continue_family<Precise>(Symmetry::Odd, 2, 1, Q, {}), InvalidParameters);
    CHECK_THROWS_AS(continue_family<Precise>(Symmetry::Odd, 2, 1, Q, {Precise(1e-3), Precise(1e-4)}),
                    InvalidParameters);
    CHECK_THROWS_AS(continue_family<Precise>(Symmetry::Odd, 2, 1, Q, {Precise(0.6)}),
                    InvalidParameters);
    CHECK_THROWS_AS(continue_family<Precise>(Symmetry::Odd, 1, 1, Q, {Precise(0)}),
                    InadmissibleError);
}

TEST_CASE("finite-difference slope matches the first-order trace derivative", "[continuation][slow]") {
    const auto fd = trace_slope_fd<Precise>(Symmetry::Odd, 2, 1, Q);
    const auto an = tau_prime_odd(2, 1, P);
    CHECK_THAT(d(fd.slope), WithinRel(an.value(), 1e-2));
    CHECK_THAT(d(fd.trace0), WithinAbs(2.0, 1e-20));
    const auto fe = trace_slope_fd<Precise>(Symmetry::Even, 2, 1, Q);
    CHECK_THAT(d(fe.slope), WithinRel(tau_prime_even(2, 1, P).value(), 1e-2));
}
