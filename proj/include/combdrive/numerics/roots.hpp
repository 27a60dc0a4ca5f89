#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"

#include <cmath>

namespace combdrive::numerics {

template <class Real>
struct RootResult {
    Real root;
    Real residual;
    int iterations;
};

/// Root of f on [a, b] by bisection to width `tol`. Requires f(a) f(b) <= 0.
template <class Real, class F>
RootResult<Real> find_root(const F &f, Real a, Real b, const Real &tol = Tolerances<Real>::root(),
                           int max_iter = 400) {
    using std::abs;
    if (!(a < b)) {
        throw InvalidBracket("bracket must satisfy a < b");
    }
    Real fa = f(a);
    Real fb = f(b);
    if (fa == 0) return {a, fa, 0};
    if (fb == 0) return {b, fb, 0};
    if ((fa > 0) == (fb > 0)) {
        throw InvalidBracket("f(a) and f(b) have the same sign");
    }
    int it = 0;
    while (b - a > tol && it < max_iter) {
        const Real mid = a + (b - a) / Real(2);
        if (mid <= a || mid >= b) break; // bracket at machine resolution
        const Real fm = f(mid);
        ++it;
        if (fm == 0) return {mid, fm, it};
        if ((fm > 0) == (fa > 0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    const Real r = abs(fa) < abs(fb) ? a : b;
    return {r, abs(fa) < abs(fb) ? fa : fb, it};
}

/// Bisection followed by one Newton polish with derivative df. The polish is
/// kept only if it stays inside the final bracket and lowers |f|.
template <class Real, class F, class DF>
RootResult<Real> find_root(const F &f, const DF &df, Real a, Real b,
                           const Real &tol = Tolerances<Real>::root(), int max_iter = 400) {
    using std::abs;
    auto res = find_root(f, a, b, tol, max_iter);
    const Real d = df(res.root);
    if (d != 0) {
        const Real cand = res.root - res.residual / d;
        if (abs(cand - res.root) <= Real(2) * tol) {
            const Real fc = f(cand);
            if (abs(fc) < abs(res.residual)) {
                return {cand, fc, res.iterations + 1};
            }
        }
    }
    return res;
}

} // namespace combdrive::numerics
