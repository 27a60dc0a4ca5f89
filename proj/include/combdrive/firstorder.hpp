// First-order behaviour of the monodromy trace in the drive amplitude.
//
// For an autonomous (m, p) orbit x(t) on level hbar with T = m Tv / p, the
// trace of the forced problem satisfies tau(0) = 2 and
//
//     tau'(0) = -p T'(hbar) int_0^{m Tv} F23(x, t) x' dt,
//     F23     = d2F / dt d delta at delta = 0 = -8 beta V0 x P'(t) / (1 - x^2)^2.
//
// Writing G = 4 beta V0 / (1 - x^2), so that G' = 8 beta V0 x x' / (1 - x^2)^2,
// one integration by parts gives the profile form
//
//     tau'(0) = -p T' int_0^{m Tv} G P''(t) dt,
//
// which for P = cos(omega0 t) is omega0^2 p T' int G cos(omega0 t) dt. When
// m = 2n and p = 1 the integrand has quarter-period symmetry and
//
//     tau'(0) = 4 omega0^2 T' A_n,   A_n = int_0^{n Tv / 2} G cos(omega0 t) dt.
//
// All integrals are evaluated on the phase arc of the level (see
// QuarterGeometry) rather than along an integrated trajectory, so the
// boundary layer at the turning point is resolved by the graded mesh.
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"
#include "combdrive/hill.hpp"
#include "combdrive/model.hpp"
#include "combdrive/numerics/gauss_legendre.hpp"
#include "combdrive/numerics/quadrature.hpp"
#include "combdrive/orbits.hpp"
#include "combdrive/period.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace combdrive {

// =============================================================================
// Integrands
// =============================================================================

/// G(x) = 4 beta V0 / (1 - x^2).
template <class Real>
Real g_function(const Real &x, const ModelParams<Real> &params) {
    detail::require_inside(x, "g_function");
    return Real(4) * params.beta() * params.v0() / (Real(1) - x * x);
}

/// dG/dt along a trajectory through (x, x').
template <class Real>
Real g_rate(const Real &x, const Real &xdot, const ModelParams<Real> &params) {
    detail::require_inside(x, "g_rate");
    const Real y = Real(1) - x * x;
    return Real(8) * params.beta() * params.v0() * x * xdot / (y * y);
}

/// F23 = -8 beta V0 x P'(t) / (1 - x^2)^2.
template <class Real>
Real f23(const Real &x, const Real &t, const ModelParams<Real> &params,
         const DriveSpec<Real> &drive = DriveSpec<Real>{}) {
    detail::require_inside(x, "f23");
    const Real y = Real(1) - x * x;
    return Real(-8) * params.beta() * params.v0() * x * drive.profile_rate(t, params.omega0()) /
           (y * y);
}

/// Cubic U with G'' = 8 beta V0 Y^-4 U(Y), Y = 1 - x^2, on the level hbar.
template <class Real>
Real convexity_cubic(const Real &y, const Real &hbar, const ModelParams<Real> &params) {
    const Real bv = params.beta() * params.v0() * params.v0();
    return ((Real(-2) * y + (Real(12) * bv + Real(6) - Real(6) * hbar)) * y +
            (Real(8) * hbar - Real(4) - Real(32) * bv)) *
               y +
           Real(20) * bv;
}

/// G'' from the cubic.
template <class Real>
Real g_second_derivative(const Real &x, const Real &hbar, const ModelParams<Real> &params) {
    const Real y = Real(1) - x * x;
    const Real y2 = y * y;
    return Real(8) * params.beta() * params.v0() * convexity_cubic(y, hbar, params) / (y2 * y2);
}

// =============================================================================
// Phase-arc integration
// =============================================================================

/// Options for integrals along a periodic orbit. Panels are doubled until
/// two estimates differ by at most rel_tol times the integral of |h|, which
/// stays meaningful when the integral itself cancels to zero.
template <class Real>
struct ArcOptions {
    Real rel_tol = Tolerances<Real>::quad();
    int max_doublings = 10;
};

template <class Real>
struct ArcIntegral {
    Real value;
    Real magnitude;       ///< integral of |h|
    Real last_change;
    Real period;          ///< period implied by the arc quadrature
    std::size_t panels = 0;
};

/// Integrates h(x, x', t) along the odd orbit of a level. Quarter k covers
/// t in [k T/4, (k+1) T/4]; within one period the quarters map onto the
/// phase arc as
///
///     k mod 4 = 0:  t = base + s,        x =  X,  x' =  W
///               1:  t = base + T/2 - s,  x =  X,  x' = -W
///               2:  t = base + T/2 + s,  x = -X,  x' = -W
///               3:  t = base + T - s,    x = -X,  x' =  W
///
/// where s in [0, T/4] is the time since the zero crossing and (X, W) >= 0.
/// A time offset of -T/4 turns the odd orbit into the even one.
template <class Real>
class PhaseArc {
  public:
    PhaseArc(const EnergyLevel<Real> &level, const ModelParams<Real> &params)
        : geo_(level, params) {
        if (!(level.hbar > 0) || !(level.gap > 0)) {
            throw RangeError("level outside (0, hbar*)");
        }
    }

    /// Integral over quarters [first, last) of the odd orbit, each time
    /// argument shifted by offset_quarters * T/4.
    template <class H>
    ArcIntegral<Real> integrate(int first, int last, int offset_quarters, const H &h,
                                const ArcOptions<Real> &opt = {}) const {
        using std::abs;
        if (first >= last) throw InvalidParameters("empty quarter range");
        auto mesh = geo_.mesh();
        auto prev = evaluate(mesh, first, last, offset_quarters, h);
        for (int k = 0; k < opt.max_doublings; ++k) {
            mesh = numerics::refine_mesh(mesh);
            auto cur = evaluate(mesh, first, last, offset_quarters, h);
            cur.last_change = abs(cur.value - prev.value);
            if (cur.last_change <= opt.rel_tol * cur.magnitude) return cur;
            prev = cur;
        }
        throw ConvergenceError("orbit integral did not converge after " +
                               std::to_string(opt.max_doublings) + " panel doublings");
    }

    /// Integral over the forcing window [0, m Tv) = p periods of the orbit.
    template <class H>
    ArcIntegral<Real> window(Symmetry sym, int p, const H &h,
                             const ArcOptions<Real> &opt = {}) const {
        if (sym == Symmetry::Odd) return integrate(0, 4 * p, 0, h, opt);
        return integrate(1, 4 * p + 1, -1, h, opt);
    }

    /// Integral over the first quarter period of the given orbit.
    template <class H>
    ArcIntegral<Real> first_quarter(Symmetry sym, const H &h,
                                    const ArcOptions<Real> &opt = {}) const {
        if (sym == Symmetry::Odd) return integrate(0, 1, 0, h, opt);
        return integrate(1, 2, -1, h, opt);
    }

    const QuarterGeometry<Real> &geometry() const { return geo_; }

  private:
    struct Node {
        Real x;
        Real speed;
        Real s;       ///< time since the zero crossing
        Real weight;  ///< dt quadrature weight
    };

    std::vector<Node> nodes(const std::vector<Real> &mesh, Real &quarter) const {
        const auto &rule = numerics::gauss20<Real>();
        const Real inv_sqrt2 = Real(1) / sqrt2<Real>();
        std::vector<Node> out;
        out.reserve(rule.size() * (mesh.size() - 1));
        // t_turn(phi) = int_0^phi f / sqrt(2): time since the turning point.
        Real cumulative = 0;
        for (std::size_t k = 0; k + 1 < mesh.size(); ++k) {
            const Real a = mesh[k];
            const Real mid = (a + mesh[k + 1]) / Real(2);
            const Real half = (mesh[k + 1] - a) / Real(2);
            Real panel = 0;
            for (std::size_t i = 0; i < rule.size(); ++i) {
                const Real phi = mid + half * rule.nodes[i];
                const auto q = geo_.at(phi);
                const Real w = half * rule.weights[i] * q.f * inv_sqrt2;
                panel += w;
                // Time from a to phi by the same rule on [a, phi].
                const Real mid2 = (a + phi) / Real(2);
                const Real half2 = (phi - a) / Real(2);
                Real partial = 0;
                for (std::size_t j = 0; j < rule.size(); ++j) {
                    partial += rule.weights[j] * geo_.at(mid2 + half2 * rule.nodes[j]).f;
                }
                out.push_back({q.x, q.speed, cumulative + half2 * partial * inv_sqrt2, w});
            }
            cumulative += panel;
        }
        quarter = cumulative;
        for (auto &nd : out) nd.s = quarter - nd.s;
        return out;
    }

    template <class H>
    ArcIntegral<Real> evaluate(const std::vector<Real> &mesh, int first, int last, int offset,
                               const H &h) const {
        using std::abs;
        Real quarter = 0;
        const auto pts = nodes(mesh, quarter);
        const Real T = Real(4) * quarter;
        Real value = 0;
        Real magnitude = 0;
        for (int k = first; k < last; ++k) {
            const int r = ((k % 4) + 4) % 4;
            const Real base = Real((k - r) / 4) * T + Real(offset) * quarter;
            for (const auto &nd : pts) {
                Real t, x, v;
                switch (r) {
                case 0: t = base + nd.s; x = nd.x; v = nd.speed; break;
                case 1: t = base + Real(2) * quarter - nd.s; x = nd.x; v = -nd.speed; break;
                case 2: t = base + Real(2) * quarter + nd.s; x = -nd.x; v = -nd.speed; break;
                default: t = base + T - nd.s; x = -nd.x; v = nd.speed; break;
                }
                const Real hv = h(x, v, t);
                value += nd.weight * hv;
                magnitude += nd.weight * abs(hv);
            }
        }
        return {value, magnitude, Real(0), T, mesh.size() - 1};
    }

    QuarterGeometry<Real> geo_;
};

// =============================================================================
// Trace derivative
// =============================================================================

enum class FirstOrderMethod { GeneralIntegral, CosineForm, QuarterForm };

inline const char *to_string(FirstOrderMethod m) {
    switch (m) {
    case FirstOrderMethod::GeneralIntegral: return "general-integral";
    case FirstOrderMethod::CosineForm: return "cosine-form";
    default: return "quarter-form";
    }
}

/// tau'(0) for one orbit by every applicable method.
template <class Real = double>
struct TracePrime {
    Symmetry symmetry;
    int m = 0;
    int p = 0;
    int n = 0;                      ///< m = 2 n p, or 0
    Real hbar;
    Real gap;
    Real period_derivative;         ///< T'(hbar)
    Real general;                   ///< -p T' int F23 x' dt
    Real cosine;                    ///< -p T' int G P'' dt
    std::optional<Real> quarter;    ///< 4 omega0^2 T' A_n (p = 1, cosine drive)
    Real scale;                     ///< p T' int |G P''| dt
    bool delicate = false;          ///< m / (2p) not an integer

    /// Preferred value: the profile form.
    const Real &value() const { return cosine; }

    Real method(FirstOrderMethod k) const {
        switch (k) {
        case FirstOrderMethod::GeneralIntegral: return general;
        case FirstOrderMethod::CosineForm: return cosine;
        default:
            if (!quarter) throw InvalidParameters("quarter form needs m = 2n, p = 1");
            return *quarter;
        }
    }

    /// Largest pairwise difference between methods relative to |value|.
    Real spread() const {
        using std::abs;
        using std::max;
        Real d = abs(general - cosine);
        if (quarter) d = max(d, max(abs(*quarter - cosine), abs(*quarter - general)));
        return d / abs(cosine);
    }

    /// |value| relative to the integral scale; the test for a vanishing
    /// first-order term.
    Real relative_size() const {
        using std::abs;
        return abs(cosine) / scale;
    }
};

/// tau'(0) along the (m, p) orbit of the given symmetry under `drive`.
template <class Real = double>
TracePrime<Real> tau_prime(Symmetry sym, int m, int p, const ModelParams<Real> &params,
                           const DriveSpec<Real> &drive = DriveSpec<Real>{},
                           const ArcOptions<Real> &opt = {}) {
    using std::abs;
    require_admissible(m, p, params);
    const Real tv = params.tv();
    const Real w0 = params.omega0();
    const auto level = period_inverse(Real(m) * tv / Real(p), params);
    const Real dT = period_derivative(level, params);
    const PhaseArc<Real> arc(level, params);

    const auto general = arc.window(sym, p, [&](const Real &x, const Real &v, const Real &t) {
        return f23(x, t, params, drive) * v;
    }, opt);
    const auto cosine = arc.window(sym, p, [&](const Real &x, const Real &, const Real &t) {
        return g_function(x, params) * drive.profile_accel(t, w0);
    }, opt);

    TracePrime<Real> out;
    out.symmetry = sym;
    out.m = m;
    out.p = p;
    out.n = harmonic_index(m, p);
    out.hbar = level.hbar;
    out.gap = level.gap;
    out.period_derivative = dT;
    out.general = -Real(p) * dT * general.value;
    out.cosine = -Real(p) * dT * cosine.value;
    out.scale = Real(p) * dT * cosine.magnitude;
    out.delicate = out.n == 0;
    if (p == 1 && out.n > 0 && drive.is_cosine()) {
        const auto a = arc.first_quarter(sym, [&](const Real &x, const Real &, const Real &t) {
            using std::cos;
            return g_function(x, params) * cos(w0 * t);
        }, opt);
        out.quarter = Real(4) * w0 * w0 * dT * a.value;
    }
    return out;
}

template <class Real = double>
TracePrime<Real> tau_prime_odd(int m, int p, const ModelParams<Real> &params,
                               const DriveSpec<Real> &drive = DriveSpec<Real>{}) {
    return tau_prime(Symmetry::Odd, m, p, params, drive);
}

template <class Real = double>
TracePrime<Real> tau_prime_even(int m, int p, const ModelParams<Real> &params,
                                const DriveSpec<Real> &drive = DriveSpec<Real>{}) {
    return tau_prime(Symmetry::Even, m, p, params, drive);
}

/// A_n = int_0^{n Tv / 2} G_n cos(omega0 t) dt on the (2n, 1) orbit of the
/// given symmetry.
template <class Real = double>
Real a_coefficient(int n, const ModelParams<Real> &params, Symmetry sym = Symmetry::Odd) {
    if (n < 1) throw InvalidParameters("n must be >= 1");
    require_admissible(2 * n, 1, params);
    const auto level = period_inverse(Real(2 * n) * params.tv(), params);
    const PhaseArc<Real> arc(level, params);
    const Real w0 = params.omega0();
    return arc.first_quarter(sym, [&](const Real &x, const Real &, const Real &t) {
        using std::cos;
            return g_function(x, params) * cos(w0 * t);
    }).value;
}

// =============================================================================
// Stability prediction
// =============================================================================

/// omega0 < 2 n sqrt(1 - 4 beta V0^2).
template <class Real>
bool frequency_condition(int n, const ModelParams<Real> &params) {
    using std::sqrt;
    return params.omega0() < Real(2 * n) * sqrt(Real(1) - params.coupling());
}

struct StabilityPrediction {
    StabilityKind kind = StabilityKind::Undetermined;
    VerdictSource source = VerdictSource::TheoremPrediction;
    int sign = 0;                  ///< predicted sign of tau'(0), 0 if none
    bool frequency_condition = false;
    std::string detail;
};

/// Stability for 0 < delta small from the trace-derivative theorems. For
/// m = 2np: odd orbits have tau' of sign (-1)^n, elliptic for odd n and
/// hyperbolic for even n; even orbits have tau' > 0 and are hyperbolic.
/// Orbits with m / (2p) not an integer have tau' = 0 and are left
/// undetermined at first order.
template <class Real>
StabilityPrediction predict_stability(Symmetry sym, int m, int p,
                                      const ModelParams<Real> &params) {
    require_admissible(m, p, params);
    StabilityPrediction out;
    const int n = harmonic_index(m, p);
    if (n == 0) {
        out.detail = "m/(2p) is not an integer: first-order term vanishes";
        return out;
    }
    out.frequency_condition = frequency_condition(n, params);
    if (!out.frequency_condition) {
        out.detail = "frequency condition omega0 < 2n sqrt(1 - 4 beta V0^2) fails";
        return out;
    }
    if (sym == Symmetry::Even) {
        out.sign = 1;
    } else {
        out.sign = n % 2 == 1 ? -1 : 1;
    }
    out.kind = out.sign < 0 ? StabilityKind::Elliptic : StabilityKind::Hyperbolic;
    out.detail = "tau(delta) = 2 + tau'(0) delta + O(delta^2) with tau'(0) " +
                 std::string(out.sign < 0 ? "< 0" : "> 0");
    return out;
}

/// Stability for small delta from a computed trace derivative.
template <class Real>
StabilityPrediction first_order_stability(const TracePrime<Real> &tp,
                                          const Real &delicate_tol = Real(1e-8)) {
    StabilityPrediction out;
    out.source = VerdictSource::FirstOrderCriterion;
    out.frequency_condition = tp.n > 0;
    if (tp.relative_size() <= delicate_tol) {
        out.detail = "tau'(0) vanishes to tolerance";
        return out;
    }
    out.sign = tp.value() < 0 ? -1 : 1;
    out.kind = out.sign < 0 ? StabilityKind::Elliptic : StabilityKind::Hyperbolic;
    out.detail = "sign of computed tau'(0)";
    return out;
}

// =============================================================================
// Convexity of G along the (2n, 1) orbit
// =============================================================================

/// Evidence for convexity of G_n on [0, n Tv / 2] along the odd (2n, 1)
/// orbit, where Y = 1 - x^2 sweeps [y1, 1].
struct ConvexityCertificate {
    int n = 0;
    double hbar = 0;
    double y1 = 0;                  ///< root of the turning-point quadratic
    double y1_alternate = 0;        ///< the other root of the quadratic
    double y1_turning = 0;          ///< 1 - x+^2 from the level
    double y1_error = 0;            ///< |y1 - y1_turning|
    double u_min = 0;               ///< min of U on the grid over [y1, 1]
    double u_argmin = 0;
    double u_at_zero_error = 0;     ///< |U(0) - 20 beta V0^2|
    double u_at_one_error = 0;      ///< |U(1) - 2 hbar|
    double g2_min = 0;              ///< min of G'' by finite differences on the orbit
    double g2_mismatch = 0;         ///< max |G''_fd - 8 beta V0 Y^-4 U|
    int grid = 0;

    bool convex() const { return u_min > 0 && g2_min >= 0; }
};

/// Builds the certificate in quad precision. G'' is differenced on `fd_points`
/// interior times of the integrated orbit, independently of the cubic.
template <class Real = Precise>
ConvexityCertificate convexity_certificate(int n, const ModelParams<Real> &params,
                                           int grid = 1000, int fd_points = 200) {
    using std::abs;
    using std::sqrt;
    if (n < 1) throw InvalidParameters("n must be >= 1");
    if (grid < 2) throw InvalidParameters("grid needs at least two points");
    const auto orbit = odd_orbit<Real>(2 * n, 1, params);
    const Real H = orbit.hbar();
    const Real bv = params.beta() * params.v0() * params.v0();

    ConvexityCertificate out;
    out.n = n;
    out.grid = grid;
    out.hbar = to_double(H);

    // 1 - x+^2 solves y^2 - (1 - 2H + 4 beta V0^2) y + 4 beta V0^2 = 0; the
    // turning point inside the well is the larger root.
    const Real b = Real(0.5) - H + Real(2) * bv;
    const Real rad = Real(4) * bv * bv - Real(4) * bv * H - Real(2) * bv + H * H + Real(0.25) - H;
    if (rad < 0) throw DomainError("turning-point quadratic has no real roots");
    const Real y1 = b + sqrt(rad);
    const Real y1_alt = b - sqrt(rad);
    const Real y1_turn = Real(1) - orbit.level.x_plus * orbit.level.x_plus;
    out.y1 = to_double(y1);
    out.y1_alternate = to_double(y1_alt);
    out.y1_turning = to_double(y1_turn);
    out.y1_error = to_double(abs(y1 - y1_turn));

    out.u_at_zero_error = to_double(abs(convexity_cubic(Real(0), H, params) - Real(20) * bv));
    out.u_at_one_error = to_double(abs(convexity_cubic(Real(1), H, params) - Real(2) * H));

    Real u_min = 0, u_arg = 0;
    for (int k = 0; k < grid; ++k) {
        const Real y = y1 + (Real(1) - y1) * Real(k) / Real(grid - 1);
        const Real u = convexity_cubic(y, H, params);
        if (k == 0 || u < u_min) {
            u_min = u;
            u_arg = y;
        }
    }
    out.u_min = to_double(u_min);
    out.u_argmin = to_double(u_arg);

    // Second differences of G along the integrated orbit on [0, n Tv / 2].
    const Real quarter = Real(n) * params.tv() / Real(2);
    const Real h = Real(1e-6);
    const auto sol = integrate_orbit(orbit, -Real(2) * h, quarter + Real(2) * h);
    Real g2_min = 0, mismatch = 0;
    for (int k = 0; k <= fd_points; ++k) {
        const Real t = quarter * Real(k) / Real(fd_points);
        const Real gm = g_function(sol.at(t - h)[0], params);
        const Real g0 = g_function(sol.at(t)[0], params);
        const Real gp = g_function(sol.at(t + h)[0], params);
        const Real g2 = (gp - Real(2) * g0 + gm) / (h * h);
        const Real formula = g_second_derivative(sol.at(t)[0], H, params);
        if (k == 0 || g2 < g2_min) g2_min = g2;
        mismatch = std::max(mismatch, Real(abs(g2 - formula)));
    }
    out.g2_min = to_double(g2_min);
    out.g2_mismatch = to_double(mismatch);
    return out;
}

} // namespace combdrive
