// Forced periodic orbits by symmetric shooting and their continuation in
// the drive amplitude delta.
//
// The forced equation is odd in x and even in t, so
//   - an odd solution (x(0) = 0, x'(0) = eta) with x(m Tv / 2) = 0, and
//   - an even solution (x(0) = xi, x'(0) = 0) with x'(m Tv / 2) = 0
// is m Tv-periodic. Shooting over half the window needs only one scalar
// equation, solved by Newton with the variational column as derivative.
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"
#include "combdrive/flow.hpp"
#include "combdrive/hill.hpp"
#include "combdrive/model.hpp"
#include "combdrive/numerics/taylor.hpp"
#include "combdrive/orbits.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace combdrive {

/// Default amplitude grid for families.
inline std::vector<double> default_delta_grid() {
    return {0.0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2};
}

template <class Real = Precise>
struct ShootingOptions {
    double residual_tol = 1e-10;   ///< accept when |residual| is below this
    double return_tol = 1e-8;      ///< bound on |state(m Tv) - state(0)|
    int max_iterations = 40;
    Real polish_tol = Real(1024) * epsilon<Real>();  ///< relative step that ends polishing
};

/// A forced m Tv-periodic orbit with its monodromy.
template <class Real = Precise>
struct ForcedOrbit {
    Symmetry symmetry;
    int m = 0;
    int p = 0;
    Real delta;
    Real init;                     ///< eta (odd) or xi (even)
    Real shooting_residual;        ///< |x(m Tv/2)| or |x'(m Tv/2)|
    Real return_residual;          ///< |state(m Tv) - state(0)|
    Monodromy<Real> monodromy;
    int iterations = 0;

    State<Real, 2> initial_state() const {
        return symmetry == Symmetry::Odd ? State<Real, 2>{Real(0), init}
                                         : State<Real, 2>{init, Real(0)};
    }
    const Real &trace() const { return monodromy.trace; }
};

namespace detail {

template <class Real>
State<Real, 2> symmetric_start(Symmetry sym, const Real &init) {
    return sym == Symmetry::Odd ? State<Real, 2>{Real(0), init} : State<Real, 2>{init, Real(0)};
}

template <class Real>
struct HalfWindow {
    Real residual;
    Real derivative;   ///< d residual / d unknown
    int crossings = 0; ///< sign changes of x strictly inside (0, m Tv / 2)
};

/// Residual and its derivative in the unknown at t = m Tv / 2.
template <class Real>
HalfWindow<Real> half_window(Symmetry sym, const Real &init, const DriveSpec<Real> &drive,
                             const ModelParams<Real> &params, int m) {
    const auto y0 = symmetric_start(sym, init);
    const State<Real, 6> z0{y0[0], y0[1], Real(1), Real(0), Real(0), Real(1)};
    numerics::TaylorOptions<Real> opt;
    opt.dense = false;
    const Real half = Real(m) * params.tv() / Real(2);
    const auto sol =
        numerics::integrate_taylor(CombJet<Real, 6>(params, drive), z0, Real(0), half, opt);
    const auto &z = sol.final_state();
    // Step nodes are dense enough that no zero is stepped over twice. The
    // first node of an odd orbit and the last one are skipped since x is 0
    // there by construction.
    int crossings = 0;
    const auto &st = sol.states();
    int sign = 0;
    for (std::size_t k = 1; k + 1 < st.size(); ++k) {
        const int sk = st[k][0] > 0 ? 1 : (st[k][0] < 0 ? -1 : 0);
        if (sk == 0) continue;
        if (sign != 0 && sk != sign) ++crossings;
        sign = sk;
    }
    if (sym == Symmetry::Even && !st.empty() && st.size() > 1) {
        const int s0 = st[0][0] > 0 ? 1 : -1;
        const int s1 = st[1][0] > 0 ? 1 : -1;
        if (s0 != s1) ++crossings;
    }
    // Odd: d x / d eta = psi2. Even: d x' / d xi = psi1'.
    if (sym == Symmetry::Odd) return {z[0], z[4], crossings};
    return {z[1], z[3], crossings};
}

/// Zero crossings inside (0, m Tv / 2) of the autonomous (m, p) orbit.
inline int expected_crossings(Symmetry sym, int p) { return sym == Symmetry::Odd ? p - 1 : p; }

} // namespace detail

template <class Real>
struct ShootingRoot {
    Real init;
    Real residual;
    int iterations = 0;
};

/// Newton on the half-window residual with backtracking; a secant step
/// replaces a degenerate derivative. Throws ConvergenceError on failure.
template <class Real = Precise>
ShootingRoot<Real> solve_shooting(Symmetry sym, int m, int p, const DriveSpec<Real> &drive,
                                  const ModelParams<Real> &params, const Real &guess,
                                  const ShootingOptions<Real> &opt = {}) {
    using std::abs;
    if (m < 1 || p < 1) throw InvalidParameters("m and p must be >= 1");
    drive.validate(params);
    auto evaluate = [&](const Real &x) -> std::optional<detail::HalfWindow<Real>> {
        try {
            return detail::half_window(sym, x, drive, params, m);
        } catch (const StepUnderflow &) {
        } catch (const DomainError &) {
        } catch (const ConvergenceError &) {
        }
        return std::nullopt;
    };
    Real x = guess;
    auto cur = evaluate(x);
    if (!cur) throw ConvergenceError("shooting trajectory from the initial guess left the domain");
    Real prev_x = 0, prev_r = 0;
    bool have_prev = false;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Real r = cur->residual;
        const Real dr = cur->derivative;
        if (r == Real(0)) break;
        Real step;
        if (dr != Real(0) && std::isfinite(to_double(dr))) {
            step = r / dr;
        } else if (have_prev && r != prev_r) {
            step = r * (x - prev_x) / (r - prev_r);
        } else {
            throw ConvergenceError("shooting derivative vanished");
        }
        if (abs(r) <= Real(opt.residual_tol) &&
            abs(step) <= opt.polish_tol * std::max(abs(x), Real(1))) {
            break;
        }
        // Backtrack while the trial trajectory leaves the domain or the
        // residual grows.
        std::optional<detail::HalfWindow<Real>> next;
        Real trial = x - step;
        for (int k = 0; k < 30; ++k) {
            next = evaluate(trial);
            if (next && abs(next->residual) < abs(r)) break;
            if (next && abs(r) <= Real(opt.residual_tol)) break;  // rounding floor
            next.reset();
            step /= Real(2);
            trial = x - step;
        }
        if (!next) throw ConvergenceError("shooting line search failed");
        prev_x = x;
        prev_r = r;
        have_prev = true;
        const bool stalled = abs(r) <= Real(opt.residual_tol) &&
                             !(abs(next->residual) < Real(0.5) * abs(r));
        if (stalled && abs(next->residual) > abs(r)) break;  // keep the better iterate
        x = trial;
        cur = next;
        if (stalled) break;
    }
    const Real r = cur->residual;
    if (!(abs(r) <= Real(opt.residual_tol))) {
        throw ConvergenceError("shooting did not converge: residual " +
                               std::to_string(to_double(abs(r))));
    }
    // Reject solutions on other branches, such as the rest state.
    const int want = detail::expected_crossings(sym, p);
    if (cur->crossings != want) {
        throw ConvergenceError("shooting converged to a solution with " +
                               std::to_string(cur->crossings) +
                               " zero crossings in the half window, expected " +
                               std::to_string(want));
    }
    return {x, abs(r), it};
}

/// Solves for the symmetric forced orbit near `guess` and computes its
/// monodromy. Throws ConvergenceError when shooting fails and
/// PeriodicityError when the result does not close over m Tv.
template <class Real = Precise>
ForcedOrbit<Real> shoot(Symmetry sym, int m, int p, const DriveSpec<Real> &drive,
                        const ModelParams<Real> &params, const Real &guess,
                        const ShootingOptions<Real> &opt = {}) {
    if (p < 1) throw InvalidParameters("p must be >= 1");
    const auto root = solve_shooting(sym, m, p, drive, params, guess, opt);
    ForcedOrbit<Real> out;
    out.symmetry = sym;
    out.m = m;
    out.p = p;
    out.delta = drive.delta();
    out.init = root.init;
    out.shooting_residual = root.residual;
    out.iterations = root.iterations;
    out.monodromy =
        monodromy(detail::symmetric_start(sym, root.init), drive, params, m, Real(opt.return_tol));
    out.return_residual = out.monodromy.base_residual;
    return out;
}

/// x(m Tv / 2) = 0 from (0, eta).
template <class Real = Precise>
ForcedOrbit<Real> shoot_odd(int m, int p, const DriveSpec<Real> &drive,
                            const ModelParams<Real> &params, const Real &eta_guess,
                            const ShootingOptions<Real> &opt = {}) {
    return shoot(Symmetry::Odd, m, p, drive, params, eta_guess, opt);
}

/// x'(m Tv / 2) = 0 from (xi, 0).
template <class Real = Precise>
ForcedOrbit<Real> shoot_even(int m, int p, const DriveSpec<Real> &drive,
                             const ModelParams<Real> &params, const Real &xi_guess,
                             const ShootingOptions<Real> &opt = {}) {
    return shoot(Symmetry::Even, m, p, drive, params, xi_guess, opt);
}

/// Forced orbit at delta continued from the autonomous (m, p) orbit.
template <class Real = Precise>
ForcedOrbit<Real> forced_orbit(Symmetry sym, int m, int p, const Real &delta,
                               const ModelParams<Real> &params,
                               const std::vector<Real> &harmonics = {Real(1)},
                               const ShootingOptions<Real> &opt = {}) {
    const auto base = make_orbit<Real>(sym, m, p, params);
    return shoot(sym, m, p, DriveSpec<Real>(delta, harmonics), params, base.init, opt);
}

// =============================================================================
// Continuation
// =============================================================================

template <class Real = Precise>
struct ContinuationOptions {
    ShootingOptions<Real> shooting;
    int max_halvings = 24;         ///< consecutive sub-step halvings before giving up
    int max_substeps = 4000;       ///< sub-steps allowed between two grid points
    /// For odd families with m = 2np and n even, seed each shooting problem
    /// from the even forced orbit shifted by n Tv / 2, a whole number of
    /// drive periods. The odd family itself is steep in eta near delta = 0.
    bool seed_from_shift = true;
    std::vector<Real> harmonics{Real(1)};
};

template <class Real = Precise>
struct FamilyPoint {
    ForcedOrbit<Real> orbit;
    StabilityVerdict verdict;
};

template <class Real = Precise>
struct Family {
    Symmetry symmetry;
    int m = 0;
    int p = 0;
    std::vector<FamilyPoint<Real>> points;
    bool complete = false;
    std::optional<double> failed_delta;   ///< first grid value not reached
    std::string failure;
};

/// Where a family computation resumes: last accepted (delta, init).
template <class Real = Precise>
struct ResumePoint {
    Real delta;
    Real init;
};

namespace detail {

/// Polynomial extrapolation through the last three accepted (delta, value)
/// pairs.
template <class Real>
class Extrapolator {
  public:
    void push(const Real &d, const Real &v) {
        if (!pts_.empty() && pts_.back().first == d) pts_.pop_back();
        pts_.push_back({d, v});
        if (pts_.size() > 3) pts_.erase(pts_.begin());
    }
    bool empty() const { return pts_.empty(); }

    Real operator()(const Real &d) const {
        Real acc = 0;
        for (std::size_t i = 0; i < pts_.size(); ++i) {
            Real w = 1;
            for (std::size_t j = 0; j < pts_.size(); ++j) {
                if (j != i) w *= (d - pts_[j].first) / (pts_[i].first - pts_[j].first);
            }
            acc += w * pts_[i].second;
        }
        return acc;
    }

  private:
    std::vector<std::pair<Real, Real>> pts_;
};

} // namespace detail

/// Continues the (m, p) orbit of the given symmetry across `grid` (sorted,
/// nonnegative). Sub-steps between grid points are predicted by quadratic
/// extrapolation in delta, halved on failure (at most `max_halvings` times
/// in a row) and doubled after two successes. Stops cleanly at the first
/// grid value it cannot reach. `on_point` is invoked after each accepted
/// grid point.
template <class Real = Precise, class Callback>
Family<Real> continue_family(Symmetry sym, int m, int p, const ModelParams<Real> &params,
                             const std::vector<Real> &grid, const ContinuationOptions<Real> &opt,
                             const std::optional<ResumePoint<Real>> &resume, const Callback &on_point) {
    using std::abs;
    if (grid.empty()) throw InvalidParameters("empty delta grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0 || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw InvalidParameters("delta grid must be nonnegative and strictly increasing");
        }
        DriveSpec<Real>(grid[i], opt.harmonics).validate(params);
    }
    require_admissible(m, p, params);

    Family<Real> fam;
    fam.symmetry = sym;
    fam.m = m;
    fam.p = p;

    Real d_prev;
    detail::Extrapolator<Real> path;
    if (resume) {
        d_prev = resume->delta;
        path.push(resume->delta, resume->init);
    } else {
        d_prev = Real(0);
        path.push(Real(0), make_orbit<Real>(sym, m, p, params).init);
    }

    const int n = harmonic_index(m, p);
    const bool shift_seed = opt.seed_from_shift && sym == Symmetry::Odd && n > 0 && n % 2 == 0;
    detail::Extrapolator<Real> even_path;
    if (shift_seed) even_path.push(Real(0), make_orbit<Real>(Symmetry::Even, m, p, params).init);

    // Shooting guess at d. With shift seeding the even orbit at d is solved
    // first and its state n Tv / 2 earlier gives eta.
    auto predict = [&](const Real &d) {
        if (shift_seed) {
            try {
                const DriveSpec<Real> drive(d, opt.harmonics);
                const auto even =
                    solve_shooting(Symmetry::Even, m, p, drive, params, even_path(d), opt.shooting);
                const Real shift = Real(n) * params.tv() / Real(2);
                const auto y = integrate_orbit(params, drive, State<Real, 2>{even.init, Real(0)},
                                               Real(0), shift)
                                   .final_state();
                if (abs(y[0]) <= Real(opt.shooting.residual_tol)) {
                    even_path.push(d, even.init);
                    return -y[1];
                }
            } catch (const std::exception &) {
                // Fall back to extrapolating the odd family.
            }
        }
        return path(d);
    };

    for (const Real &target : grid) {
        if (resume && target <= resume->delta) continue;
        std::optional<ForcedOrbit<Real>> reached;
        std::string error;
        Real step = target - d_prev;
        int halvings = 0;
        int streak = 0;
        int substeps = 0;
        while (true) {
            if (++substeps > opt.max_substeps) {
                error = "sub-step budget exhausted";
                break;
            }
            const bool last = abs(target - d_prev) <= abs(step);
            const Real d = last ? target : d_prev + step;
            try {
                const DriveSpec<Real> drive(d, opt.harmonics);
                if (last) {
                    // Grid point: full solve with monodromy.
                    reached = shoot(sym, m, p, drive, params, predict(d), opt.shooting);
                    path.push(d, reached->init);
                    d_prev = d;
                    break;
                }
                const auto root = solve_shooting(sym, m, p, drive, params, predict(d), opt.shooting);
                path.push(d, root.init);
                d_prev = d;
                halvings = 0;
                if (++streak >= 2) {
                    step *= Real(2);
                    streak = 0;
                }
            } catch (const std::exception &e) {
                streak = 0;
                if (++halvings > opt.max_halvings) {
                    error = e.what();
                    break;
                }
                step /= Real(2);
            }
        }
        if (!reached) {
            fam.failed_delta = to_double(target);
            fam.failure = error;
            return fam;
        }
        FamilyPoint<Real> pt{*reached, classify(to_double(reached->trace()))};
        pt.verdict.source = VerdictSource::NumericalTrace;
        fam.points.push_back(pt);
        on_point(fam.points.back());
    }
    fam.complete = true;
    return fam;
}

template <class Real = Precise>
Family<Real> continue_family(Symmetry sym, int m, int p, const ModelParams<Real> &params,
                             const std::vector<Real> &grid,
                             const ContinuationOptions<Real> &opt = {}) {
    return continue_family(sym, m, p, params, grid, opt, std::optional<ResumePoint<Real>>{},
                           [](const FamilyPoint<Real> &) {});
}

// =============================================================================
// Finite-difference trace slope
// =============================================================================

template <class Real = Precise>
struct TraceSlope {
    Real slope;        ///< Richardson estimate of d tau / d delta at 0
    Real coarse;       ///< one-sided slope at 2h
    Real fine;         ///< one-sided slope at h
    Real h;
    Real trace0;       ///< tau(0), 2 in exact arithmetic
};

/// Richardson slope from tau at delta in {0, h, 2h}: 2 s(h) - s(2h) with
/// s(d) = (tau(d) - tau(0)) / d.
template <class Real = Precise>
TraceSlope<Real> trace_slope_fd(Symmetry sym, int m, int p, const ModelParams<Real> &params,
                                const Real &h = Real(1e-4),
                                const ShootingOptions<Real> &opt = {}) {
    const auto base = make_orbit<Real>(sym, m, p, params);
    const Real tau0 = monodromy(base.initial_state(), DriveSpec<Real>{}, params, m).trace;
    ContinuationOptions<Real> copt;
    copt.shooting = opt;
    copt.max_halvings = 12;
    const auto fam = continue_family(sym, m, p, params, std::vector<Real>{h, Real(2) * h}, copt);
    if (!fam.complete) {
        throw ConvergenceError("trace slope: family not continued to delta = " +
                               std::to_string(*fam.failed_delta) + ": " + fam.failure);
    }
    const Real s1 = (fam.points[0].orbit.trace() - tau0) / h;
    const Real s2 = (fam.points[1].orbit.trace() - tau0) / (Real(2) * h);
    return {Real(2) * s1 - s2, s2, s1, h, tau0};
}

/// Starts at h0 and divides h by `factor` until two successive Richardson
/// slopes agree to `rel_tol`. Needed where the linear regime of tau(delta)
/// is far narrower than 1e-4.
template <class Real = Precise>
TraceSlope<Real> trace_slope_refined(Symmetry sym, int m, int p, const ModelParams<Real> &params,
                                     const Real &h0 = Real(1e-4), const Real &rel_tol = Real(1e-3),
                                     const Real &factor = Real(10), int max_levels = 14,
                                     const ShootingOptions<Real> &opt = {}) {
    using std::abs;
    Real h = h0;
    std::optional<TraceSlope<Real>> prev;
    for (int k = 0; k <= max_levels; ++k, h /= factor) {
        std::optional<TraceSlope<Real>> cur;
        try {
            cur = trace_slope_fd(sym, m, p, params, h, opt);
        } catch (const ConvergenceError &) {
            // No family out to 2h; the next level is smaller.
        }
        if (cur && prev && abs(cur->slope - prev->slope) <= rel_tol * abs(cur->slope)) return *cur;
        prev = cur;
    }
    throw ConvergenceError("trace slope did not settle under delta refinement");
}

} // namespace combdrive
