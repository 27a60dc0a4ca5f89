// Dormand-Prince 5(4) with the embedded error estimate and the
// fourth-order continuous extension of Hairer and Wanner.
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace combdrive::numerics {

template <class Real, std::size_t N>
using State = std::array<Real, N>;

struct IvpStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
};

/// Solution of an initial value problem: accepted nodes plus a dense
/// interpolant valid anywhere in the integrated span. Immutable once built.
template <class Real, std::size_t N>
class IvpSolution {
  public:
    using StateT = State<Real, N>;

    const std::vector<Real> &times() const { return times_; }
    const std::vector<StateT> &states() const { return states_; }
    const StateT &final_state() const { return states_.back(); }
    const IvpStats &stats() const { return stats_; }
    const Real &rel_tol() const { return rel_tol_; }
    const Real &abs_tol() const { return abs_tol_; }
    Real t0() const { return times_.front(); }
    Real t1() const { return times_.back(); }

    /// Dense evaluation. t must lie in the integrated span.
    StateT at(const Real &t) const {
        const std::size_t k = locate(t);
        if (k + 1 >= times_.size()) return states_.back();
        const Real h = times_[k + 1] - times_[k];
        const Real th = (t - times_[k]) / h;
        const Real th1 = Real(1) - th;
        const auto &c = dense_[k];
        StateT y{};
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
        }
        return y;
    }

  private:
    template <class R, std::size_t M, class F>
    friend IvpSolution<R, M> integrate_ivp(const F &, const State<R, M> &, const R &, const R &,
                                           const R &, const R &);

    std::size_t locate(const Real &t) const {
        using std::abs;
        const bool forward = times_.back() >= times_.front();
        // Allow a few ulps of slack so grid points computed in floating
        // point at the span ends are accepted.
        const Real slack = Real(64) * epsilon<Real>() *
                           std::max({Real(1), Real(abs(times_.front())), Real(abs(times_.back()))});
        if (forward ? (t < times_.front() - slack || t > times_.back() + slack)
                    : (t > times_.front() + slack || t < times_.back() - slack)) {
            throw RangeError("dense evaluation outside the integrated span");
        }
        std::size_t lo = 0;
        std::size_t hi = times_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (forward ? times_[mid] <= t : times_[mid] >= t) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return lo;
    }

    std::vector<Real> times_;
    std::vector<StateT> states_;
    std::vector<std::array<StateT, 5>> dense_;
    IvpStats stats_;
    Real rel_tol_{}, abs_tol_{};
};

namespace detail {

template <class Real>
struct Dopri5Tableau {
    const Real c2 = Real(1) / 5, c3 = Real(3) / 10, c4 = Real(4) / 5, c5 = Real(8) / 9;
    const Real a21 = Real(1) / 5;
    const Real a31 = Real(3) / 40, a32 = Real(9) / 40;
    const Real a41 = Real(44) / 45, a42 = Real(-56) / 15, a43 = Real(32) / 9;
    const Real a51 = Real(19372) / 6561, a52 = Real(-25360) / 2187, a53 = Real(64448) / 6561,
               a54 = Real(-212) / 729;
    const Real a61 = Real(9017) / 3168, a62 = Real(-355) / 33, a63 = Real(46732) / 5247,
               a64 = Real(49) / 176, a65 = Real(-5103) / 18656;
    const Real a71 = Real(35) / 384, a73 = Real(500) / 1113, a74 = Real(125) / 192,
               a75 = Real(-2187) / 6784, a76 = Real(11) / 84;
    const Real e1 = Real(71) / 57600, e3 = Real(-71) / 16695, e4 = Real(71) / 1920,
               e5 = Real(-17253) / 339200, e6 = Real(22) / 525, e7 = Real(-1) / 40;
    const Real d1 = Real(-12715105075LL) / Real(11282082432LL),
               d3 = Real(87487479700LL) / Real(32700410799LL),
               d4 = Real(-10690763975LL) / Real(1880347072LL),
               d5 = Real(701980252875LL) / Real(199316789632LL),
               d6 = Real(-1453857185LL) / Real(822651844LL),
               d7 = Real(69997945LL) / Real(29380423LL);
};

} // namespace detail

/// Integrates y' = field(t, y) from t0 to t1 (either direction) with local
/// error control  |err_i| <= rel_tol max(|y_i|, |y_i,new|) + abs_tol  per
/// component. A DomainError raised by the field is treated as a rejected
/// step. Throws StepUnderflow with the stall location when the step size
/// falls below machine resolution.
template <class Real, std::size_t N, class F>
IvpSolution<Real, N> integrate_ivp(const F &field, const State<Real, N> &y0, const Real &t0,
                                   const Real &t1, const Real &rel_tol, const Real &abs_tol) {
    using std::abs;
    using std::max;
    using std::min;
    using std::pow;
    using StateT = State<Real, N>;

    if (!(rel_tol > 0) || abs_tol < 0) {
        throw InvalidParameters("integrator tolerances must be positive");
    }
    if (t1 == t0) {
        throw InvalidParameters("empty integration span");
    }
    static const detail::Dopri5Tableau<Real> tb{};

    IvpSolution<Real, N> sol;
    sol.rel_tol_ = rel_tol;
    sol.abs_tol_ = abs_tol;
    sol.times_.push_back(t0);
    sol.states_.push_back(y0);

    const Real dir = t1 > t0 ? Real(1) : Real(-1);
    const Real span = abs(t1 - t0);

    auto eval = [&](const Real &t, const StateT &y) {
        ++sol.stats_.evaluations;
        return field(t, y);
    };
    auto axpy = [](const StateT &y, std::initializer_list<std::pair<Real, const StateT *>> terms,
                   const Real &h) {
        StateT out = y;
        for (const auto &[a, k] : terms) {
            for (std::size_t i = 0; i < N; ++i) out[i] += h * a * (*k)[i];
        }
        return out;
    };

    Real t = t0;
    StateT y = y0;
    StateT k1 = eval(t, y);

    // Initial step from the scaled size of y and y'.
    Real h;
    {
        Real d0 = 0, d1 = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const Real sk = abs_tol + rel_tol * abs(y[i]);
            d0 = max(d0, abs(y[i]) / sk);
            d1 = max(d1, abs(k1[i]) / sk);
        }
        h = (d0 < Real(1e-5) || d1 < Real(1e-5)) ? Real(1e-6) : Real(0.01) * d0 / d1;
        h = min(h, span);
        h = max(h, Real(64) * epsilon<Real>() * max(abs(t0), Real(1)));
    }

    const Real order_exp = Real(1) / Real(5);
    bool last_rejected = false;
    while (dir * (t1 - t) > 0) {
        if (h < Real(16) * epsilon<Real>() * max(abs(t), Real(1))) {
            throw StepUnderflow("step size underflow at t = " + std::to_string(to_double(t)),
                                to_double(t));
        }
        bool clipped = false;
        if (h >= abs(t1 - t)) {
            h = abs(t1 - t);
            clipped = true;
        }
        const Real hs = dir * h;
        StateT k2, k3, k4, k5, k6, k7, ynew;
        bool domain_fail = false;
        try {
            k2 = eval(t + tb.c2 * hs, axpy(y, {{tb.a21, &k1}}, hs));
            k3 = eval(t + tb.c3 * hs, axpy(y, {{tb.a31, &k1}, {tb.a32, &k2}}, hs));
            k4 = eval(t + tb.c4 * hs, axpy(y, {{tb.a41, &k1}, {tb.a42, &k2}, {tb.a43, &k3}}, hs));
            k5 = eval(t + tb.c5 * hs,
                      axpy(y, {{tb.a51, &k1}, {tb.a52, &k2}, {tb.a53, &k3}, {tb.a54, &k4}}, hs));
            k6 = eval(t + hs, axpy(y,
                                   {{tb.a61, &k1},
                                    {tb.a62, &k2},
                                    {tb.a63, &k3},
                                    {tb.a64, &k4},
                                    {tb.a65, &k5}},
                                   hs));
            ynew = axpy(y, {{tb.a71, &k1}, {tb.a73, &k3}, {tb.a74, &k4}, {tb.a75, &k5}, {tb.a76, &k6}},
                        hs);
            k7 = eval(t + hs, ynew);
        } catch (const DomainError &) {
            domain_fail = true;
        }
        if (domain_fail) {
            ++sol.stats_.rejected;
            h *= Real(0.25);
            last_rejected = true;
            continue;
        }

        Real err = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const Real e = hs * (tb.e1 * k1[i] + tb.e3 * k3[i] + tb.e4 * k4[i] + tb.e5 * k5[i] +
                                 tb.e6 * k6[i] + tb.e7 * k7[i]);
            const Real sk = abs_tol + rel_tol * max(abs(y[i]), abs(ynew[i]));
            err = max(err, abs(e) / sk);
        }

        if (err <= Real(1)) {
            std::array<StateT, 5> c;
            for (std::size_t i = 0; i < N; ++i) {
                const Real ydiff = ynew[i] - y[i];
                const Real bspl = hs * k1[i] - ydiff;
                c[0][i] = y[i];
                c[1][i] = ydiff;
                c[2][i] = bspl;
                c[3][i] = ydiff - hs * k7[i] - bspl;
                c[4][i] = hs * (tb.d1 * k1[i] + tb.d3 * k3[i] + tb.d4 * k4[i] + tb.d5 * k5[i] +
                                tb.d6 * k6[i] + tb.d7 * k7[i]);
            }
            t = clipped ? t1 : t + hs;
            y = ynew;
            k1 = k7;
            sol.times_.push_back(t);
            sol.states_.push_back(y);
            sol.dense_.push_back(c);
            ++sol.stats_.accepted;
            Real fac = err > 0 ? Real(0.9) * pow(err, -order_exp) : Real(5);
            fac = min(Real(5), max(Real(0.2), fac));
            if (last_rejected) fac = min(fac, Real(1));
            h *= fac;
            last_rejected = false;
        } else {
            ++sol.stats_.rejected;
            h *= max(Real(0.2), Real(0.9) * pow(err, -order_exp));
            last_rejected = true;
        }
    }
    return sol;
}

} // namespace combdrive::numerics
