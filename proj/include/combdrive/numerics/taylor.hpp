// Taylor series integrator for analytic vector fields.
//
// A jet functor computes the normalized Taylor coefficients of the solution
// through the point (t0, c[0]) by automatic differentiation of the field:
//
//     void operator()(const Real &t0, std::vector<State<Real, N>> &c) const;
//
// c arrives with size order + 1 and c[0] filled; the functor fills the rest.
// High orders let quad-precision orbits run at a few hundred steps per
// period, where an explicit Runge-Kutta pair would need millions.
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"
#include "combdrive/numerics/dopri5.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace combdrive::numerics {

template <class Real>
struct TaylorOptions {
    Real tol = Tolerances<Real>::taylor();
    int order = 0;                 ///< 0 picks an order matched to tol.
    std::size_t group = 2;         ///< components sharing one error scale.
    std::size_t max_steps = 200000;
    bool dense = true;
};

template <class Real>
int taylor_order_for(const Real &tol) {
    using std::log;
    const double lt = -to_double(log(tol));
    return std::max(8, static_cast<int>(std::ceil(lt / 2.0)) + 2);
}

template <class Real, std::size_t N>
class TaylorSolution {
  public:
    using StateT = State<Real, N>;

    const std::vector<Real> &times() const { return times_; }
    const std::vector<StateT> &states() const { return states_; }
    const StateT &final_state() const { return states_.back(); }
    std::size_t steps() const { return times_.size() - 1; }
    int order() const { return order_; }
    Real t0() const { return times_.front(); }
    Real t1() const { return times_.back(); }
    bool has_dense() const { return !series_.empty(); }

    /// Evaluates the local Taylor polynomial of the step containing t.
    StateT at(const Real &t) const {
        if (series_.empty()) {
            throw InvalidParameters("solution was built without dense output");
        }
        const std::size_t k = locate(t);
        if (k + 1 >= times_.size()) return states_.back();
        const Real tau = t - times_[k];
        const auto &c = series_[k];
        StateT y{};
        for (std::size_t i = 0; i < N; ++i) {
            Real acc = c.back()[i];
            for (std::size_t j = c.size() - 1; j-- > 0;) acc = acc * tau + c[j][i];
            y[i] = acc;
        }
        return y;
    }

  private:
    template <class R, std::size_t M, class J>
    friend TaylorSolution<R, M> integrate_taylor(const J &, const State<R, M> &, const R &,
                                                 const R &, const TaylorOptions<R> &);

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
    std::vector<std::vector<StateT>> series_;
    int order_ = 0;
};

/// Integrates from t0 to t1 (either direction). The step is chosen from the
/// last two coefficients so that their contribution stays below tol relative
/// to each component group's magnitude.
template <class Real, std::size_t N, class J>
TaylorSolution<Real, N> integrate_taylor(const J &jet, const State<Real, N> &y0, const Real &t0,
                                         const Real &t1, const TaylorOptions<Real> &opt = {}) {
    using std::abs;
    using std::max;
    using std::min;
    using std::pow;
    using StateT = State<Real, N>;

    if (!(opt.tol > 0)) {
        throw InvalidParameters("Taylor tolerance must be positive");
    }
    if (opt.group == 0 || N % opt.group != 0) {
        throw InvalidParameters("state size must be a multiple of the error group");
    }
    const int order = opt.order > 0 ? opt.order : taylor_order_for(opt.tol);

    TaylorSolution<Real, N> sol;
    sol.order_ = order;
    sol.times_.push_back(t0);
    sol.states_.push_back(y0);
    if (t1 == t0) return sol;

    const Real dir = t1 > t0 ? Real(1) : Real(-1);
    const Real safety = Real(0.9);
    std::vector<StateT> c(order + 1);
    Real t = t0;
    StateT y = y0;
    std::size_t steps = 0;

    while (dir * (t1 - t) > 0) {
        if (++steps > opt.max_steps) {
            throw ConvergenceError("Taylor integrator exceeded the step budget");
        }
        c.assign(order + 1, StateT{});
        c[0] = y;
        jet(t, c);

        Real h = abs(t1 - t);
        for (std::size_t g0 = 0; g0 < N; g0 += opt.group) {
            Real scale = 1;
            for (std::size_t i = g0; i < g0 + opt.group; ++i) scale = max(scale, abs(y[i]));
            for (int j : {order - 1, order}) {
                Real cj = 0;
                for (std::size_t i = g0; i < g0 + opt.group; ++i) cj = max(cj, abs(c[j][i]));
                if (cj > 0) {
                    h = min(h, safety * pow(opt.tol * scale / cj, Real(1) / Real(j)));
                }
            }
        }
        if (!(h > Real(16) * epsilon<Real>() * max(abs(t), Real(1)))) {
            throw StepUnderflow("Taylor step underflow at t = " + std::to_string(to_double(t)),
                                to_double(t));
        }
        bool clipped = false;
        if (h >= abs(t1 - t)) {
            h = abs(t1 - t);
            clipped = true;
        }
        const Real hs = dir * h;
        StateT ynew{};
        for (std::size_t i = 0; i < N; ++i) {
            Real acc = c[order][i];
            for (int j = order - 1; j >= 0; --j) acc = acc * hs + c[j][i];
            ynew[i] = acc;
        }
        t = clipped ? t1 : t + hs;
        y = ynew;
        sol.times_.push_back(t);
        sol.states_.push_back(y);
        if (opt.dense) sol.series_.push_back(c);
    }
    return sol;
}

} // namespace combdrive::numerics
