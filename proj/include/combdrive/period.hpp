// Period function T(hbar) of the autonomous oscillation, its derivative and
// inverse, and the admissible (m, p) pairs it induces.
//
// A quarter orbit runs from x = 0 to the turning point x+. With
// x = x+ cos(phi) the inverse square root at x+ disappears and
//
//     dt/dphi = f(phi) / sqrt(2),
//     f = sqrt(2 Y Y+ / (s (D + D+) + D D+)),
//
// where Y = 1 - x^2, D = x*^2 - x^2 = D+ + x+^2 sin^2(phi) and s = 1 - x*^2.
// Every factor is a sum of positive terms, so the integrand stays accurate
// when the level approaches the saddle loop and D+ -> 0.
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"
#include "combdrive/model.hpp"
#include "combdrive/numerics/quadrature.hpp"
#include "combdrive/report.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace combdrive {

// =============================================================================
// Quarter-orbit geometry
// =============================================================================

template <class Real>
struct QuarterPoint {
    Real x;     ///< position x+ cos(phi)
    Real y;     ///< 1 - x^2
    Real d;     ///< x*^2 - x^2
    Real f;     ///< sqrt(2) dt/dphi
    Real speed; ///< |x'| on the level
};

/// The level's quarter orbit parameterized by the angle phi measured from
/// the turning point: phi = 0 at x = x+, phi = pi/2 at x = 0.
template <class Real>
class QuarterGeometry {
  public:
    QuarterGeometry(const EnergyLevel<Real> &level, const ModelParams<Real> &params)
        : level_(level), s_(params.sqrt_coupling()), y_plus_(params.sqrt_coupling() + level.d_plus) {}

    QuarterPoint<Real> at(const Real &phi) const {
        using std::cos;
        using std::sin;
        using std::sqrt;
        const Real sp = sin(phi);
        const Real x = level_.x_plus * cos(phi);
        const Real d = level_.d_plus + level_.x_plus * level_.x_plus * sp * sp;
        const Real y = s_ + d;
        const Real den = s_ * (d + level_.d_plus) + d * level_.d_plus;
        const Real ratio = den / (y * y_plus_);
        return {x, y, d, sqrt(Real(2) / ratio), level_.x_plus * sp * sqrt(ratio)};
    }

    /// Width of the boundary layer at the turning point.
    Real layer() const {
        using std::sqrt;
        return sqrt(level_.d_plus) / level_.x_plus;
    }

    /// Breakpoints graded toward phi = 0 down to a quarter of the layer.
    std::vector<Real> mesh() const {
        const Real w = layer() / Real(4);
        return numerics::graded_mesh_at_start(Real(0), pi<Real>() / Real(2), w);
    }

    const EnergyLevel<Real> &level() const { return level_; }
    const Real &sqrt_coupling() const { return s_; }

  private:
    EnergyLevel<Real> level_;
    Real s_;
    Real y_plus_;
};

// =============================================================================
// Period and derivative
// =============================================================================

template <class Real>
struct PeriodPoint {
    Real hbar;
    Real gap;
    Real x_plus;
    Real period;
    Real derivative;
    std::size_t period_panels;
    std::size_t derivative_panels;
};

namespace detail {

template <class Real>
void require_level_range(const Real &hbar, const ModelParams<Real> &params) {
    if (!(hbar > 0) || !(hbar < params.hbar_star())) {
        throw RangeError("energy outside (0, hbar*)");
    }
    if (params.hbar_star() - hbar < Real(1e-12) * params.hbar_star()) {
        throw RangeError("energy within 1e-12 hbar* of the saddle loop; use a gap-based level");
    }
}

template <class Real>
numerics::QuadOptions<Real> period_quad_options() {
    numerics::QuadOptions<Real> opt;
    opt.rel_tol = Tolerances<Real>::quad();
    opt.max_doublings = 12;
    return opt;
}

} // namespace detail

/// T at a level given by (hbar, gap). Accepts levels arbitrarily close to
/// the saddle loop as long as the gap is represented exactly.
template <class Real>
numerics::QuadResult<Real> period_quadrature(const EnergyLevel<Real> &level,
                                             const ModelParams<Real> &params) {
    const QuarterGeometry<Real> geo(level, params);
    auto res = numerics::quad_mesh([&](const Real &phi) { return geo.at(phi).f; }, geo.mesh(),
                                   detail::period_quad_options<Real>());
    res.value *= Real(2) * sqrt2<Real>();
    return res;
}

template <class Real>
Real period(const EnergyLevel<Real> &level, const ModelParams<Real> &params) {
    if (!(level.hbar > 0) || level.gap <= 0) {
        throw RangeError("level outside (0, hbar*)");
    }
    return period_quadrature(level, params).value;
}

/// T(hbar) for 0 < hbar <= hbar* (1 - 1e-12).
template <class Real>
Real period(const Real &hbar, const ModelParams<Real> &params) {
    detail::require_level_range(hbar, params);
    return period(level_from_energy(hbar, params), params);
}

/// dT/dhbar from the closed-form derivative integrand
///
///     T' = (sqrt(2) / hbar) int c x^2 v(x) / (Y^2 - c)^2 f dphi,
///     v = Y (4 - Y) - 3c,  Y^2 - c = D (Y + s),
///
/// with the same regularization as T. v > 0 inside the saddle loop.
template <class Real>
numerics::QuadResult<Real> period_derivative_quadrature(const EnergyLevel<Real> &level,
                                                        const ModelParams<Real> &params) {
    const QuarterGeometry<Real> geo(level, params);
    const Real c = params.coupling();
    const Real s = params.sqrt_coupling();
    auto integrand = [&](const Real &phi) {
        const auto q = geo.at(phi);
        const Real v = q.y * (Real(4) - q.y) - Real(3) * c;
        const Real den = q.d * (q.y + s);
        return c * q.x * q.x * v / (den * den) * q.f;
    };
    auto res = numerics::quad_mesh(integrand, geo.mesh(), detail::period_quad_options<Real>());
    res.value *= sqrt2<Real>() / level.hbar;
    return res;
}

template <class Real>
Real period_derivative(const EnergyLevel<Real> &level, const ModelParams<Real> &params) {
    if (!(level.hbar > 0) || level.gap <= 0) {
        throw RangeError("level outside (0, hbar*)");
    }
    return period_derivative_quadrature(level, params).value;
}

template <class Real>
Real period_derivative(const Real &hbar, const ModelParams<Real> &params) {
    detail::require_level_range(hbar, params);
    return period_derivative(level_from_energy(hbar, params), params);
}

/// The v(x) factor of the derivative integrand.
template <class Real>
Real derivative_weight_v(const Real &x, const ModelParams<Real> &params) {
    const Real y = Real(1) - x * x;
    return y * (Real(4) - y) - Real(3) * params.coupling();
}

/// Centered difference (T(hbar + h) - T(hbar - h)) / 2h. Diagnostic only.
template <class Real>
Real period_derivative_fd(const Real &hbar, const Real &h, const ModelParams<Real> &params) {
    return (period(hbar + h, params) - period(hbar - h, params)) / (Real(2) * h);
}

template <class Real>
PeriodPoint<Real> period_point(const EnergyLevel<Real> &level, const ModelParams<Real> &params) {
    const auto t = period_quadrature(level, params);
    const auto d = period_derivative_quadrature(level, params);
    return {level.hbar, level.gap, level.x_plus, t.value, d.value, t.panels, d.panels};
}

// =============================================================================
// Inverse
// =============================================================================

/// Level whose period is T_target. Solved in s = ln(hbar / gap), where
/// hbar = hbar* / (1 + e^-s) and gap = hbar* / (1 + e^s) both keep full
/// relative precision; T is nearly linear in s near the saddle loop.
/// Newton steps are safeguarded by a bisection bracket.
template <class Real>
EnergyLevel<Real> period_inverse(const Real &t_target, const ModelParams<Real> &params) {
    using std::abs;
    using std::exp;
    if (!(t_target > params.period_infimum())) {
        throw RangeError("target period at or below the infimum 2 pi / sqrt(1 - 4 beta V0^2)");
    }
    const Real hs = params.hbar_star();
    auto level_at = [&](const Real &s) {
        return level_from_gap(hs / (Real(1) + exp(s)), params);
    };
    auto residual = [&](const Real &s) { return period(level_at(s), params) - t_target; };

    const Real tol = std::max(Real(4) * Tolerances<Real>::quad(), Real(64) * epsilon<Real>()) *
                     t_target;
    Real lo = -4, hi = 4;
    Real r_lo = residual(lo);
    while (r_lo >= 0) {
        lo -= 8;
        if (lo < -600) throw RangeError("target period too close to the infimum");
        r_lo = residual(lo);
    }
    Real r_hi = residual(hi);
    while (r_hi <= 0) {
        lo = hi;
        r_lo = r_hi;
        hi += 8;
        if (hi > 600) throw RangeError("target period beyond the representable gap");
        r_hi = residual(hi);
    }

    Real s = lo + (hi - lo) * (-r_lo) / (r_hi - r_lo);
    for (int it = 0; it < 200; ++it) {
        const auto lv = level_at(s);
        const Real r = period(lv, params) - t_target;
        if (abs(r) <= tol) return lv;
        if (r < 0) {
            lo = s;
        } else {
            hi = s;
        }
        const Real dtds = period_derivative(lv, params) * lv.hbar * lv.gap / hs;
        Real next = s - r / dtds;
        if (!(next > lo && next < hi)) next = (lo + hi) / Real(2);
        if (hi - lo <= Real(8) * epsilon<Real>() * std::max(abs(s), Real(1))) return lv;
        s = next;
    }
    throw ConvergenceError("period inverse did not converge");
}

// =============================================================================
// Admissible (m, p)
// =============================================================================

/// nu_m = floor(m Tv sqrt(1 - 4 beta V0^2) / (2 pi)).
template <class Real>
int max_p(int m, const ModelParams<Real> &params) {
    using std::floor;
    using std::sqrt;
    if (m < 1) throw InvalidParameters("m must be >= 1");
    const Real v =
        Real(m) * params.tv() * sqrt(Real(1) - params.coupling()) / two_pi<Real>();
    return static_cast<int>(to_double(floor(v)));
}

/// Admissible iff 1 <= p <= nu_m and the orbit period m Tv / p lies strictly
/// above the infimum (the two agree except on the boundary).
template <class Real>
bool admissible(int m, int p, const ModelParams<Real> &params) {
    if (m < 1 || p < 1) return false;
    if (p > max_p(m, params)) return false;
    return Real(m) * params.tv() / Real(p) > params.period_infimum();
}

template <class Real>
void require_admissible(int m, int p, const ModelParams<Real> &params) {
    if (!admissible(m, p, params)) {
        throw InadmissibleError("(m, p) = (" + std::to_string(m) + ", " + std::to_string(p) +
                                ") is not admissible: need 1 <= p <= nu_" + std::to_string(m) + " = " +
                                std::to_string(m >= 1 ? max_p(m, params) : 0));
    }
}

/// n with m = 2 n p, or 0 when m / (2p) is not an integer.
inline int harmonic_index(int m, int p) {
    return (p > 0 && m % (2 * p) == 0) ? m / (2 * p) : 0;
}

/// All admissible pairs with m <= m_max.
template <class Real>
std::vector<std::pair<int, int>> admissible_pairs(int m_max, const ModelParams<Real> &params) {
    std::vector<std::pair<int, int>> out;
    for (int m = 1; m <= m_max; ++m) {
        for (int p = 1; p <= max_p(m, params); ++p) {
            if (admissible(m, p, params)) out.emplace_back(m, p);
        }
    }
    return out;
}

// =============================================================================
// Period theorem check
// =============================================================================

/// Energies log-spaced toward both ends of (0, hbar*): the lower half in
/// hbar, the upper half in the gap, spanning 1e-8 hbar* at each end.
template <class Real>
std::vector<EnergyLevel<Real>> period_grid(const ModelParams<Real> &params, int grid_size) {
    using std::pow;
    std::vector<EnergyLevel<Real>> grid;
    const int lower = grid_size / 2;
    const int upper = grid_size - lower;
    const Real hs = params.hbar_star();
    const Real lo_exp = -8, mid_exp = std::log10(0.5);
    for (int i = 0; i < lower; ++i) {
        const Real e = lo_exp + (mid_exp - lo_exp) * Real(i) / Real(lower);
        grid.push_back(level_from_energy(hs * pow(Real(10), e), params));
    }
    for (int i = 0; i < upper; ++i) {
        const Real e = mid_exp + (lo_exp - mid_exp) * Real(i) / Real(upper - 1);
        grid.push_back(level_from_gap(hs * pow(Real(10), e), params));
    }
    return grid;
}

/// Small-energy limit: T(1e-10 hbar*) against 2 pi / sqrt(1 - 4 beta V0^2).
template <class Real>
Report check_period_limit(const ModelParams<Real> &params, double tol = 1e-4) {
    using std::abs;
    Report rep;
    const Real t = period(Real(1e-10) * params.hbar_star(), params);
    const double err = to_double(abs(t - params.period_infimum()));
    rep.add("period: small-energy limit", err <= tol, err, tol,
            "|T(1e-10 hbar*) - 2pi/sqrt(1-4 beta V0^2)|, T = " + std::to_string(to_double(t)));
    return rep;
}

/// Growth toward the saddle loop on the gaps hbar* 10^-k, k = 4, 6, 8, 10.
template <class Real>
Report check_period_growth(const ModelParams<Real> &params) {
    Report rep;
    const Real tinf = params.period_infimum();
    Real prev = 0;
    bool increasing = true;
    for (int k : {4, 6, 8, 10}) {
        const Real g = params.hbar_star() * std::pow(10.0, -k);
        const Real t = period(level_from_gap(g, params), params);
        if (!(t > prev)) increasing = false;
        prev = t;
    }
    rep.add("period: strictly increasing toward the saddle loop (k = 4, 6, 8, 10)", increasing,
            to_double(prev), to_double(tinf));
    rep.add("period: T(k = 10) exceeds three times the infimum", prev > Real(3) * tinf,
            to_double(prev / tinf), 3.0, "ratio T / infimum");
    return rep;
}

/// Positivity of T' on a log-spaced grid and agreement with centered
/// differences. The difference quotients are taken in quad precision so
/// that roundoff stays below the bound at both ends of the grid.
template <class Real>
Report check_period_derivative(const ModelParams<Real> &params, int grid_size = 100,
                               double tol = 1e-6) {
    using std::abs;
    if (grid_size < 10) throw InvalidParameters("grid_size must be >= 10");
    Report rep;
    const auto qp = params.template cast<Precise>();
    const auto grid = period_grid(params, grid_size);
    double worst_rel = 0;
    double min_deriv = 1e300;
    double min_v = 1e300;
    bool monotone = true;
    Real prev_t = 0;
    for (const auto &lv : grid) {
        const auto pt = period_point(lv, params);
        min_deriv = std::min(min_deriv, to_double(pt.derivative));
        if (!(pt.period > prev_t)) monotone = false;
        prev_t = pt.period;
        // The minimum of v over [0, x+] sits at x+.
        min_v = std::min(min_v, to_double(derivative_weight_v(lv.x_plus, params)));

        const auto lq = lv.template cast<Precise>();
        const Precise step = Precise(1e-4) * (lq.hbar < lq.gap ? lq.hbar : lq.gap);
        const auto up = level_from_gap(lq.gap - step, qp);
        const auto dn = level_from_gap(lq.gap + step, qp);
        const Precise fd = (period(up, qp) - period(dn, qp)) / (Precise(2) * step);
        const double rel = to_double(abs(Precise(pt.derivative) - fd) / fd);
        worst_rel = std::max(worst_rel, rel);
    }
    rep.add("period: derivative positive on the grid", min_deriv > 0, min_deriv, 0.0,
            "minimum of T'");
    rep.add("period: v(x) > 0 on the integration range", min_v > 0, min_v, 0.0);
    rep.add("period: T strictly increasing on the grid", monotone, 0.0, 0.0);
    rep.add("period: derivative matches centered differences", worst_rel <= tol, worst_rel, tol,
            "max relative deviation");
    return rep;
}

/// All three properties of the period function.
template <class Real>
Report verify_period_theorem(const ModelParams<Real> &params, int grid_size = 100) {
    Report rep = check_period_limit(params, 1e-5);
    rep.append(check_period_growth(params));
    rep.append(check_period_derivative(params, grid_size));
    return rep;
}

} // namespace combdrive
