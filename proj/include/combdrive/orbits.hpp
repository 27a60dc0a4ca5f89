// Symmetric periodic solutions of the autonomous equation.
//
// An (m, p) orbit has minimal period m Tv / p and 2p zeros in [0, m Tv).
// Odd orbits start at (0, eta) with eta = sqrt(2 hbar); even orbits start at
// the turning point (x+, 0). Both are anti-periodic over half a period.
// Orbits are stored as (symmetry, level, initial value) and re-integrated on
// demand with the Taylor integrator, in quad precision by default: the
// longer orbits sit within 1e-12 of the saddle loop, where double precision
// cannot even hold the initial condition accurately enough.
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/flow.hpp"
#include "combdrive/model.hpp"
#include "combdrive/numerics/taylor.hpp"
#include "combdrive/period.hpp"
#include "combdrive/report.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace combdrive {

enum class Symmetry { Odd, Even };

inline const char *to_string(Symmetry s) { return s == Symmetry::Odd ? "odd" : "even"; }

inline Symmetry parse_symmetry(const std::string &s) {
    if (s == "odd") return Symmetry::Odd;
    if (s == "even") return Symmetry::Even;
    throw InvalidParameters("symmetry must be 'odd' or 'even', got '" + s + "'");
}

// =============================================================================
// Orbit record
// =============================================================================

template <class Real = Precise>
struct AutonomousOrbit {
    Symmetry symmetry;
    int m;
    int p;
    int n;                 ///< m = 2 n p, or 0 when m / (2p) is not an integer
    EnergyLevel<Real> level;
    Real init;             ///< eta (odd) or xi (even)
    Real minimal_period;   ///< m Tv / p
    ModelParams<Real> params;

    State<Real, 2> initial_state() const {
        return symmetry == Symmetry::Odd ? State<Real, 2>{Real(0), init}
                                         : State<Real, 2>{init, Real(0)};
    }
    Real forcing_period() const { return Real(m) * params.tv(); }
    Real hbar() const { return level.hbar; }
};

namespace detail {

template <class Real>
AutonomousOrbit<Real> make_orbit(Symmetry sym, int m, int p, const ModelParams<Real> &params) {
    using std::sqrt;
    require_admissible(m, p, params);
    const Real period_target = Real(m) * params.tv() / Real(p);
    const auto level = period_inverse(period_target, params);
    const Real init = sym == Symmetry::Odd ? sqrt(Real(2) * level.hbar) : level.x_plus;
    return {sym, m, p, harmonic_index(m, p), level, init, period_target, params};
}

} // namespace detail

/// Odd (m, p) orbit: hbar = T^-1(m Tv / p), initial state (0, sqrt(2 hbar)).
template <class Real = Precise>
AutonomousOrbit<Real> odd_orbit(int m, int p, const ModelParams<Real> &params) {
    return detail::make_orbit(Symmetry::Odd, m, p, params);
}

/// Even (m, p) orbit on the same level, initial state (x+, 0).
template <class Real = Precise>
AutonomousOrbit<Real> even_orbit(int m, int p, const ModelParams<Real> &params) {
    return detail::make_orbit(Symmetry::Even, m, p, params);
}

template <class Real = Precise>
AutonomousOrbit<Real> make_orbit(Symmetry sym, int m, int p, const ModelParams<Real> &params) {
    return detail::make_orbit(sym, m, p, params);
}

// =============================================================================
// Integration
// =============================================================================

/// Base flow (x, x') under the given drive from y0 over [t0, t1].
template <class Real>
numerics::TaylorSolution<Real, 2> integrate_orbit(const ModelParams<Real> &params,
                                                  const DriveSpec<Real> &drive,
                                                  const State<Real, 2> &y0, const Real &t0,
                                                  const Real &t1) {
    return numerics::integrate_taylor(CombJet<Real, 2>(params, drive), y0, t0, t1);
}

template <class Real>
numerics::TaylorSolution<Real, 2> integrate_orbit(const AutonomousOrbit<Real> &orbit,
                                                  const Real &t0, const Real &t1) {
    return integrate_orbit(orbit.params, DriveSpec<Real>{}, orbit.initial_state(), t0, t1);
}

// =============================================================================
// Trajectory samples
// =============================================================================

template <class Real = Precise>
struct Trajectory {
    std::vector<Real> t;
    std::vector<Real> x;
    std::vector<Real> xdot;
    std::vector<Real> energy;
    std::string integrator;
    int order = 0;
    std::size_t steps = 0;

    std::size_t size() const { return t.size(); }
};

/// Samples (x, x', H) at num_points equally spaced times over [t0, t1].
template <class Real>
Trajectory<Real> sample_solution(const numerics::TaylorSolution<Real, 2> &sol,
                                 const ModelParams<Real> &params, const Real &t0, const Real &t1,
                                 std::size_t num_points) {
    if (num_points < 2) throw InvalidParameters("num_points must be >= 2");
    Trajectory<Real> tr;
    tr.integrator = "taylor";
    tr.order = sol.order();
    tr.steps = sol.steps();
    for (std::size_t k = 0; k < num_points; ++k) {
        const Real t =
            k + 1 == num_points ? t1 : t0 + (t1 - t0) * Real(static_cast<double>(k)) /
                                                Real(static_cast<double>(num_points - 1));
        const auto y = sol.at(t);
        tr.t.push_back(t);
        tr.x.push_back(y[0]);
        tr.xdot.push_back(y[1]);
        tr.energy.push_back(hamiltonian(y[0], y[1], params));
    }
    return tr;
}

/// One minimal period of the orbit from its symmetric initial condition.
template <class Real>
Trajectory<Real> sample_orbit(const AutonomousOrbit<Real> &orbit, std::size_t num_points) {
    const auto sol = integrate_orbit(orbit, Real(0), orbit.minimal_period);
    return sample_solution(sol, orbit.params, Real(0), orbit.minimal_period, num_points);
}

/// Largest |H - hbar| over the samples.
template <class Real>
Real energy_drift(const Trajectory<Real> &tr, const Real &hbar) {
    using std::abs;
    Real worst = 0;
    for (const auto &h : tr.energy) worst = std::max(worst, Real(abs(h - hbar)));
    return worst;
}

// =============================================================================
// Zeros
// =============================================================================

template <class Real>
struct ZeroCount {
    int count = 0;
    std::vector<Real> roots;
    bool tangency_warning = false;  ///< some zero had |x'| < 1e-10
};

/// Zeros of x on [t0, t1) from the samples. Each sign change is polished on
/// the cubic Hermite interpolant built from (x, x'); a root within 1e-12 of
/// t1 (relative to the span) counts as lying on the excluded end.
template <class Real>
ZeroCount<Real> count_zeros(const Trajectory<Real> &tr, const Real &t0, const Real &t1) {
    using std::abs;
    ZeroCount<Real> out;
    if (tr.size() < 2) throw InvalidParameters("trajectory needs at least two samples");
    if (tr.t.front() > t0 || tr.t.back() < t1) {
        throw RangeError("trajectory does not cover the counting interval");
    }
    const Real tol = Real(1e-12) * (t1 - t0);
    auto accept = [&](const Real &r, const Real &slope) {
        if (r < t0 - tol || r >= t1 - tol) return;
        if (!out.roots.empty() && abs(r - out.roots.back()) <= tol) return;
        out.roots.push_back(r);
        if (abs(slope) < Real(1e-10)) out.tangency_warning = true;
    };
    for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
        const Real a = tr.t[k], b = tr.t[k + 1];
        if (b < t0 - tol || a >= t1) continue;
        const Real xa = tr.x[k], xb = tr.x[k + 1];
        if (xa == 0) {
            accept(a, tr.xdot[k]);
            continue;
        }
        if ((xa > 0) == (xb > 0) || xb == 0) continue;
        // Hermite cubic on [a, b], bisection on the interpolant.
        const Real h = b - a;
        auto herm = [&](const Real &t) {
            const Real s = (t - a) / h;
            const Real s2 = s * s, s3 = s2 * s;
            return (Real(2) * s3 - Real(3) * s2 + 1) * xa + (s3 - Real(2) * s2 + s) * h * tr.xdot[k] +
                   (Real(-2) * s3 + Real(3) * s2) * xb + (s3 - s2) * h * tr.xdot[k + 1];
        };
        Real lo = a, hi = b;
        for (int it = 0; it < 200; ++it) {
            const Real mid = (lo + hi) / Real(2);
            if (mid <= lo || mid >= hi) break;
            if ((herm(mid) > 0) == (xa > 0)) lo = mid; else hi = mid;
        }
        const Real r = (lo + hi) / Real(2);
        const Real w = (r - a) / h;
        accept(r, (Real(1) - w) * tr.xdot[k] + w * tr.xdot[k + 1]);
    }
    out.count = static_cast<int>(out.roots.size());
    return out;
}

// =============================================================================
// Symmetry residuals
// =============================================================================

template <class Real>
struct SymmetryResiduals {
    Real parity;          ///< max |x(-t) + x(t)| (odd) or |x(-t) - x(t)| (even)
    Real antiperiodic;    ///< max |x(t + T/2) + x(t)|
    Real reflection;      ///< max |x(T/2 - t) - x(t)| (odd) or |x(T/2 - t) + x(t)| (even)
    Real return_state;    ///< |state(T) - state(0)|
    Real period_error;    ///< |measured period - m Tv / p| / (m Tv / p)
    Real energy_drift;    ///< max |H - hbar| on the samples
    std::optional<Real> quarter_min_slope;  ///< min x' on [0, T/4] for odd m = 2np orbits
    int zeros = 0;        ///< zeros on [0, m Tv)
    bool tangency_warning = false;

    Real worst_symmetry() const {
        return std::max({parity, antiperiodic, reflection});
    }
};

/// Measures every symmetry the orbit must satisfy on a grid of `grid`
/// points per minimal period, re-measures the period from the return to
/// the symmetric section, and counts zeros over one forcing window m Tv.
template <class Real>
SymmetryResiduals<Real> symmetry_residuals(const AutonomousOrbit<Real> &orbit, int grid = 400) {
    using std::abs;
    const Real T = orbit.minimal_period;
    const Real half = T / Real(2);
    const Real window = orbit.forcing_period();
    const Real span = std::max(window + T / Real(8), Real(1.25) * T);
    const auto fw = integrate_orbit(orbit, Real(0), span);
    const auto bw = integrate_orbit(orbit, Real(0), -half);
    const bool odd = orbit.symmetry == Symmetry::Odd;

    SymmetryResiduals<Real> r{};
    for (int k = 0; k <= grid; ++k) {
        const Real t = half * Real(k) / Real(grid);
        const Real x = fw.at(t)[0];
        const Real xm = bw.at(-t)[0];
        const Real xh = fw.at(t + half)[0];
        const Real xr = fw.at(half - t)[0];
        r.parity = std::max(r.parity, Real(odd ? abs(xm + x) : abs(xm - x)));
        r.antiperiodic = std::max(r.antiperiodic, Real(abs(xh + x)));
        r.reflection = std::max(r.reflection, Real(odd ? abs(xr - x) : abs(xr + x)));
    }
    const auto yT = fw.at(T);
    const auto y0 = orbit.initial_state();
    r.return_state = std::max(abs(yT[0] - y0[0]), abs(yT[1] - y0[1]));

    // Period from the section crossing closest to T: x = 0 upward (odd) or
    // x' = 0 at the right turning point (even).
    {
        const int comp = odd ? 0 : 1;
        Real lo = T - T / Real(8), hi = T + T / Real(8);
        const Real flo = fw.at(lo)[comp];
        for (int it = 0; it < 300; ++it) {
            const Real mid = (lo + hi) / Real(2);
            if (mid <= lo || mid >= hi) break;
            if ((fw.at(mid)[comp] > 0) == (flo > 0)) lo = mid; else hi = mid;
        }
        r.period_error = abs((lo + hi) / Real(2) - T) / T;
    }

    // Energy and zero count on one forcing window.
    const std::size_t samples = static_cast<std::size_t>(grid) * static_cast<std::size_t>(orbit.p) + 1;
    const auto tr = sample_solution(fw, orbit.params, Real(0), window, samples);
    r.energy_drift = energy_drift(tr, orbit.level.hbar);
    // Window end is excluded; count on a trajectory reaching slightly past it.
    auto tr_ext = tr;
    {
        const Real extra = window + T / Real(16);
        const auto y = fw.at(extra);
        tr_ext.t.push_back(extra);
        tr_ext.x.push_back(y[0]);
        tr_ext.xdot.push_back(y[1]);
        tr_ext.energy.push_back(hamiltonian(y[0], y[1], orbit.params));
    }
    const auto zc = count_zeros(tr_ext, Real(0), window);
    r.zeros = zc.count;
    r.tangency_warning = zc.tangency_warning;

    if (odd && orbit.n > 0) {
        Real slope = fw.at(Real(0))[1];
        for (int k = 0; k <= grid; ++k) {
            slope = std::min(slope, fw.at(T / Real(4) * Real(k) / Real(grid))[1]);
        }
        r.quarter_min_slope = slope;
    }
    return r;
}

/// max |S(t + T/4) - C(t)| and max |C(t + T/4) + S(t)| over one period.
template <class Real>
std::pair<Real, Real> quarter_shift_residuals(const AutonomousOrbit<Real> &odd,
                                              const AutonomousOrbit<Real> &even, int grid = 400) {
    using std::abs;
    if (odd.symmetry != Symmetry::Odd || even.symmetry != Symmetry::Even) {
        throw InvalidParameters("quarter shift needs an odd and an even orbit");
    }
    const Real T = odd.minimal_period;
    const auto s = integrate_orbit(odd, Real(0), Real(1.25) * T);
    const auto c = integrate_orbit(even, Real(0), Real(1.25) * T);
    Real r1 = 0, r2 = 0;
    for (int k = 0; k <= grid; ++k) {
        const Real t = T * Real(k) / Real(grid);
        r1 = std::max(r1, Real(abs(s.at(t + T / Real(4))[0] - c.at(t)[0])));
        r2 = std::max(r2, Real(abs(c.at(t + T / Real(4))[0] + s.at(t)[0])));
    }
    return {r1, r2};
}

} // namespace combdrive
