// Vector fields of the comb-drive equation and its variational system, in
// the two forms the integrators consume: plain right-hand sides for the
// Runge-Kutta path and Taylor jets for the high-order path.
//
// Variational state layout: (x, x', psi1, psi1', psi2, psi2').
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/model.hpp"
#include "combdrive/numerics/dopri5.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace combdrive {

using numerics::State;

// =============================================================================
// Right-hand sides
// =============================================================================

/// (x, x')' = (x', -F(x, t, delta)).
template <class Real>
struct CombField {
    ModelParams<Real> params;
    DriveSpec<Real> drive;

    State<Real, 2> operator()(const Real &t, const State<Real, 2> &y) const {
        return {y[1], -force(y[0], t, params, drive)};
    }
};

/// Base flow plus the two normalized Hill solutions psi'' + q(t) psi = 0.
template <class Real>
struct CombVariationalField {
    ModelParams<Real> params;
    DriveSpec<Real> drive;

    State<Real, 6> operator()(const Real &t, const State<Real, 6> &y) const {
        const Real q = dforce_dx(y[0], t, params, drive);
        return {y[1], -force(y[0], t, params, drive), y[3], -q * y[2], y[5], -q * y[4]};
    }
};

/// Base flow plus the 2x2 state-transition matrix Phi' = [[0, 1], [-q, 0]] Phi,
/// stored row-major in y[2..5].
template <class Real>
struct CombMatrixField {
    ModelParams<Real> params;
    DriveSpec<Real> drive;

    State<Real, 6> operator()(const Real &t, const State<Real, 6> &y) const {
        const Real q = dforce_dx(y[0], t, params, drive);
        // rows of Phi: (a b; c d); row 1' = row 2, row 2' = -q row 1
        return {y[1], -force(y[0], t, params, drive), y[4], y[5], -q * y[2], -q * y[3]};
    }
};

// =============================================================================
// Taylor jets
// =============================================================================

namespace detail {

template <class Real>
inline Real cauchy(const std::vector<Real> &a, const std::vector<Real> &b, int k) {
    Real s = 0;
    for (int j = 0; j <= k; ++j) s += a[j] * b[k - j];
    return s;
}

} // namespace detail

/// Taylor jet of the comb-drive equation. N = 2 integrates (x, x');
/// N = 6 appends the two Hill fundamental solutions.
template <class Real, std::size_t N>
class CombJet {
    static_assert(N == 2 || N == 6, "CombJet supports the base (2) or variational (6) state");

  public:
    CombJet(ModelParams<Real> params, DriveSpec<Real> drive)
        : params_(std::move(params)), drive_(std::move(drive)) {}

    void operator()(const Real &t0, std::vector<State<Real, N>> &c) const {
        using std::cos;
        const int order = static_cast<int>(c.size()) - 1;
        const Real x0 = c[0][0];
        if (!(Real(1) - x0 * x0 > 0)) {
            throw DomainError("Taylor jet: |x| >= 1, finger touches the electrode");
        }
        const std::size_t len = static_cast<std::size_t>(order) + 1;
        std::vector<Real> x(len), xx(len), u(len), r(len), r2(len), a(len), w(len);
        std::vector<Real> r3, m, q, p1, p2;
        if constexpr (N == 6) {
            r3.resize(len);
            m.resize(len);
            q.resize(len);
            p1.resize(len);
            p2.resize(len);
        }

        // Voltage series V(t0 + s) = sum V_k s^k and W = V^2.
        std::vector<Real> v(len, Real(0));
        v[0] = drive_.voltage(t0, params_);
        const bool forced = drive_.delta() != 0;
        if (forced) {
            const auto &harm = drive_.harmonics();
            for (std::size_t h = 0; h < harm.size(); ++h) {
                const Real om = Real(static_cast<int>(h + 1)) * params_.omega0();
                const Real ph = om * t0;
                const Real cs = cos(ph);
                using std::sin;
                const Real sn = sin(ph);
                Real fac = drive_.delta() * harm[h];
                for (int k = 1; k <= order; ++k) {
                    fac *= om / Real(k);
                    // cos(ph + k pi/2) cycles through cos, -sin, -cos, sin.
                    switch (k % 4) {
                    case 0: v[k] += fac * cs; break;
                    case 1: v[k] -= fac * sn; break;
                    case 2: v[k] -= fac * cs; break;
                    default: v[k] += fac * sn; break;
                    }
                }
            }
            for (std::size_t k = 0; k < len; ++k) w[k] = detail::cauchy(v, v, static_cast<int>(k));
        } else {
            w[0] = v[0] * v[0];
        }
        const Real four_beta = Real(4) * params_.beta();

        for (int k = 0; k < order; ++k) {
            x[k] = c[k][0];
            xx[k] = detail::cauchy(x, x, k);
            u[k] = (k == 0 ? Real(1) : Real(0)) - xx[k];
            // r = 1/u
            Real acc = (k == 0 ? Real(1) : Real(0));
            for (int j = 1; j <= k; ++j) acc -= u[j] * r[k - j];
            r[k] = acc / u[0];
            r2[k] = detail::cauchy(r, r, k);
            a[k] = detail::cauchy(x, r2, k);
            const Real wa = forced ? detail::cauchy(w, a, k) : w[0] * a[k];
            const Real fk = x[k] - four_beta * wa;
            c[k + 1][0] = c[k][1] / Real(k + 1);
            c[k + 1][1] = -fk / Real(k + 1);

            if constexpr (N == 6) {
                r3[k] = detail::cauchy(r2, r, k);
                // m = (1 + 3 x^2) r^3
                Real mk = r3[k];
                for (int j = 0; j <= k; ++j) mk += Real(3) * xx[j] * r3[k - j];
                m[k] = mk;
                const Real wm = forced ? detail::cauchy(w, m, k) : w[0] * m[k];
                q[k] = (k == 0 ? Real(1) : Real(0)) - four_beta * wm;
                p1[k] = c[k][2];
                p2[k] = c[k][4];
                const Real qp1 = detail::cauchy(q, p1, k);
                const Real qp2 = detail::cauchy(q, p2, k);
                c[k + 1][2] = c[k][3] / Real(k + 1);
                c[k + 1][3] = -qp1 / Real(k + 1);
                c[k + 1][4] = c[k][5] / Real(k + 1);
                c[k + 1][5] = -qp2 / Real(k + 1);
            }
        }
    }

    const ModelParams<Real> &params() const { return params_; }
    const DriveSpec<Real> &drive() const { return drive_; }

  private:
    ModelParams<Real> params_;
    DriveSpec<Real> drive_;
};

} // namespace combdrive
