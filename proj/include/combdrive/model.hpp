// Comb-drive finger actuator in nondimensional form:
//
//     x'' + F(x, t, delta) = 0,   F = x (1 - 4 beta V(t)^2 / (1 - x^2)^2),
//     V(t) = V0 + delta P(t),     |x| < 1.
//
// Everything else in the library consumes the types defined here.
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace combdrive {

// =============================================================================
// Parameters
// =============================================================================

/// Physical constants of the actuator, restricted to the stable regime
/// 0 < V0 < V* = 1/(2 sqrt(beta)). Derived quantities are cached on
/// construction.
template <class Real = double>
class ModelParams {
  public:
    ModelParams(Real beta, Real v0, Real tv) : beta_(beta), v0_(v0), tv_(tv) {
        using std::sqrt;
        if (!(beta > 0) || !(v0 > 0) || !(tv > 0)) {
            throw InvalidParameters("beta, V0 and Tv must be positive");
        }
        v_star_ = Real(1) / (Real(2) * sqrt(beta));
        if (!(v0 < v_star_)) {
            throw InvalidParameters("V0 >= V* = 1/(2 sqrt(beta)): pull-in regime, no saddle loop");
        }
        omega0_ = two_pi<Real>() / tv;
        coupling_ = Real(4) * beta * v0 * v0;
        sqrt_coupling_ = Real(2) * sqrt(beta) * v0;
        x_star_sq_ = Real(1) - sqrt_coupling_;
        x_star_ = sqrt(x_star_sq_);
        hbar_star_ = x_star_sq_ * x_star_sq_ / Real(2);
        period_infimum_ = two_pi<Real>() / sqrt(Real(1) - coupling_);
    }

    /// beta = 0.25, V0 = 0.5, Tv = 2 pi.
    static ModelParams defaults() { return ModelParams(Real(0.25), Real(0.5), two_pi<Real>()); }

    template <class To>
    ModelParams<To> cast() const {
        return ModelParams<To>(real_cast<To>(beta_), real_cast<To>(v0_), real_cast<To>(tv_));
    }

    const Real &beta() const { return beta_; }
    const Real &v0() const { return v0_; }
    const Real &tv() const { return tv_; }
    const Real &omega0() const { return omega0_; }
    /// 4 beta V0^2, always < 1 in the stable regime.
    const Real &coupling() const { return coupling_; }
    /// sqrt(4 beta V0^2) = 1 - x*^2.
    const Real &sqrt_coupling() const { return sqrt_coupling_; }
    const Real &x_star() const { return x_star_; }
    const Real &x_star_sq() const { return x_star_sq_; }
    /// Energy of the saddle loop, E(x*) = x*^4 / 2.
    const Real &hbar_star() const { return hbar_star_; }
    const Real &v_star() const { return v_star_; }
    /// Small-amplitude limit of the period, 2 pi / sqrt(1 - 4 beta V0^2).
    const Real &period_infimum() const { return period_infimum_; }

  private:
    Real beta_, v0_, tv_;
    Real omega0_{}, coupling_{}, sqrt_coupling_{}, x_star_{}, x_star_sq_{}, hbar_star_{}, v_star_{},
        period_infimum_{};
};

// =============================================================================
// Voltage drive
// =============================================================================

/// V(t) = V0 + delta P(t) with P(t) = sum_h a_h cos(h omega0 t). The
/// default profile is the single harmonic P = cos(omega0 t). Any such P is
/// even, zero-mean and Tv-periodic.
template <class Real = double>
class DriveSpec {
  public:
    DriveSpec() : DriveSpec(Real(0)) {}

    explicit DriveSpec(Real delta, std::vector<Real> harmonics = {Real(1)})
        : delta_(delta), harmonics_(std::move(harmonics)) {
        if (harmonics_.empty()) {
            throw InvalidParameters("drive profile needs at least one harmonic");
        }
        if (delta_ < 0) {
            throw InvalidParameters("delta must be nonnegative");
        }
        p_min_ = compute_min();
        if (!(p_min_ < 0)) {
            throw InvalidParameters("drive profile must take negative values");
        }
    }

    /// Throws unless 0 <= delta < Delta0 = -V0 / Pmin.
    void validate(const ModelParams<Real> &params) const {
        if (!(delta_ < max_delta(params))) {
            throw InvalidParameters("delta >= Delta0 = -V0/Pmin: voltage would vanish");
        }
    }

    Real max_delta(const ModelParams<Real> &params) const { return -params.v0() / p_min_; }

    const Real &delta() const { return delta_; }
    const std::vector<Real> &harmonics() const { return harmonics_; }
    const Real &p_min() const { return p_min_; }
    bool is_cosine() const { return harmonics_.size() == 1 && harmonics_[0] == Real(1); }

    DriveSpec with_delta(Real delta) const { return DriveSpec(delta, harmonics_); }

    template <class To>
    DriveSpec<To> cast() const {
        std::vector<To> h;
        for (const auto &a : harmonics_) h.push_back(real_cast<To>(a));
        return DriveSpec<To>(real_cast<To>(delta_), std::move(h));
    }

    /// P(t), dP/dt and d2P/dt2.
    Real profile(const Real &t, const Real &omega0) const { return sum(t, omega0, 0); }
    Real profile_rate(const Real &t, const Real &omega0) const { return sum(t, omega0, 1); }
    Real profile_accel(const Real &t, const Real &omega0) const { return sum(t, omega0, 2); }

    Real voltage(const Real &t, const ModelParams<Real> &params) const {
        return params.v0() + delta_ * profile(t, params.omega0());
    }

  private:
    Real sum(const Real &t, const Real &omega0, int derivative) const {
        using std::cos;
        using std::sin;
        Real acc = 0;
        for (std::size_t i = 0; i < harmonics_.size(); ++i) {
            const Real w = Real(static_cast<int>(i + 1)) * omega0;
            const Real arg = w * t;
            switch (derivative) {
            case 0: acc += harmonics_[i] * cos(arg); break;
            case 1: acc -= harmonics_[i] * w * sin(arg); break;
            default: acc -= harmonics_[i] * w * w * cos(arg); break;
            }
        }
        return acc;
    }

    // Minimum over one period of the unit-frequency profile.
    Real compute_min() const {
        using std::cos;
        if (harmonics_.size() == 1) {
            using std::abs;
            return -abs(harmonics_[0]);
        }
        const int samples = 4096;
        Real best = 0;
        Real best_phase = 0;
        for (int k = 0; k < samples; ++k) {
            const Real phase = two_pi<Real>() * Real(k) / Real(samples);
            const Real v = sum(phase, Real(1), 0);
            if (k == 0 || v < best) {
                best = v;
                best_phase = phase;
            }
        }
        // Newton on P'(phase) = 0 from the best sample.
        Real phase = best_phase;
        for (int it = 0; it < 40; ++it) {
            const Real d1 = sum(phase, Real(1), 1);
            const Real d2 = sum(phase, Real(1), 2);
            if (!(d2 > 0)) break;
            const Real step = d1 / d2;
            phase -= step;
            using std::abs;
            if (abs(step) < Real(16) * epsilon<Real>()) break;
        }
        const Real refined = sum(phase, Real(1), 0);
        return refined < best ? refined : best;
    }

    Real delta_;
    std::vector<Real> harmonics_;
    Real p_min_{};
};

// =============================================================================
// Vector field and energy
// =============================================================================

namespace detail {
template <class Real>
void require_inside(const Real &x, const char *what) {
    using std::abs;
    if (!(abs(x) < Real(1))) {
        throw DomainError(std::string(what) + ": |x| >= 1, finger touches the electrode");
    }
}
} // namespace detail

/// F(x, t, delta) = x (1 - 4 beta V(t)^2 / (1 - x^2)^2).
template <class Real>
Real force(const Real &x, const Real &t, const ModelParams<Real> &params,
           const DriveSpec<Real> &drive) {
    detail::require_inside(x, "force");
    const Real v = drive.voltage(t, params);
    const Real y = Real(1) - x * x;
    return x * (Real(1) - Real(4) * params.beta() * v * v / (y * y));
}

/// Autonomous field f(x) = F(x, t, 0).
template <class Real>
Real force_autonomous(const Real &x, const ModelParams<Real> &params) {
    detail::require_inside(x, "force");
    const Real y = Real(1) - x * x;
    return x * (Real(1) - params.coupling() / (y * y));
}

/// dF/dx = 1 - 4 beta V(t)^2 (1 + 3 x^2) / (1 - x^2)^3.
template <class Real>
Real dforce_dx(const Real &x, const Real &t, const ModelParams<Real> &params,
               const DriveSpec<Real> &drive) {
    detail::require_inside(x, "dforce_dx");
    const Real v = drive.voltage(t, params);
    const Real y = Real(1) - x * x;
    return Real(1) - Real(4) * params.beta() * v * v * (Real(1) + Real(3) * x * x) / (y * y * y);
}

/// E(x) = x^2/2 - 2 beta V0^2/(1 - x^2) + 2 beta V0^2, written as
/// x^2 (1 - x^2 - c) / (2 (1 - x^2)) with c = 4 beta V0^2 to avoid cancellation near 0.
template <class Real>
Real energy(const Real &x, const ModelParams<Real> &params) {
    detail::require_inside(x, "energy");
    const Real y = Real(1) - x * x;
    return x * x * (y - params.coupling()) / (Real(2) * y);
}

/// hbar* - E(x) = (x*^2 - x^2)^2 / (2 (1 - x^2)). Exact rewrite, accurate
/// close to the saddle where the direct difference cancels.
template <class Real>
Real energy_gap(const Real &x, const ModelParams<Real> &params) {
    detail::require_inside(x, "energy_gap");
    const Real d = params.x_star_sq() - x * x;
    return d * d / (Real(2) * (Real(1) - x * x));
}

template <class Real>
Real hamiltonian(const Real &x, const Real &xdot, const ModelParams<Real> &params) {
    return xdot * xdot / Real(2) + energy(x, params);
}

// =============================================================================
// Equilibria
// =============================================================================

enum class EquilibriumKind { Center, Saddle, Degenerate };

inline const char *to_string(EquilibriumKind k) {
    switch (k) {
    case EquilibriumKind::Center: return "center";
    case EquilibriumKind::Saddle: return "saddle";
    default: return "degenerate";
    }
}

template <class Real>
struct Equilibrium {
    Real x;
    EquilibriumKind kind;
};

template <class Real>
struct EquilibriumSet {
    std::vector<Equilibrium<Real>> points;
    Real v_star;
    bool pull_in;
};

/// Equilibria of the autonomous equation for raw (beta, V0). Works outside
/// the stable regime, where only the origin survives and `pull_in` is set.
template <class Real>
EquilibriumSet<Real> equilibria(const Real &beta, const Real &v0) {
    using std::sqrt;
    if (!(beta > 0) || !(v0 > 0)) {
        throw InvalidParameters("beta and V0 must be positive");
    }
    EquilibriumSet<Real> out;
    out.v_star = Real(1) / (Real(2) * sqrt(beta));
    const Real c = Real(4) * beta * v0 * v0;
    const Real slope0 = Real(1) - c;
    const auto classify = [](const Real &slope) {
        if (slope > 0) return EquilibriumKind::Center;
        if (slope < 0) return EquilibriumKind::Saddle;
        return EquilibriumKind::Degenerate;
    };
    out.points.push_back({Real(0), classify(slope0)});
    out.pull_in = !(v0 < out.v_star);
    if (!out.pull_in) {
        const Real xs = sqrt(Real(1) - Real(2) * v0 * sqrt(beta));
        const Real ys = Real(1) - xs * xs;
        const Real slope = Real(1) - c * (Real(1) + Real(3) * xs * xs) / (ys * ys * ys);
        out.points.push_back({-xs, classify(slope)});
        out.points.push_back({xs, classify(slope)});
    }
    return out;
}

template <class Real>
EquilibriumSet<Real> equilibria(const ModelParams<Real> &params) {
    return equilibria(params.beta(), params.v0());
}

// =============================================================================
// Energy levels inside the saddle loop
// =============================================================================

/// An energy level 0 < hbar <= hbar* of the autonomous equation, carried
/// together with its distance to the saddle loop so that both ends of the
/// range are represented without cancellation.
template <class Real>
struct EnergyLevel {
    Real hbar;    ///< H value of the orbit.
    Real gap;     ///< hbar* - hbar.
    Real x_plus;  ///< turning point x+ in (0, x*].
    Real d_plus;  ///< x*^2 - x+^2.

    template <class To>
    EnergyLevel<To> cast() const {
        return {real_cast<To>(hbar), real_cast<To>(gap), real_cast<To>(x_plus),
                real_cast<To>(d_plus)};
    }
};

namespace detail {
// Turning point from both hbar and gap. x+^2 and 1 - x+^2 are the roots of
// Y^2 - (1 + c - 2h) Y + c = 0 in Y = 1 - x^2; the discriminant factors as
// 2 g ((1 + s)^2 - 2h), and x*^2 - x+^2 = D solves D^2 = 2 g (s + D).
template <class Real>
EnergyLevel<Real> make_level(const Real &hbar, const Real &gap, const ModelParams<Real> &params) {
    using std::sqrt;
    const Real c = params.coupling();
    const Real s = params.sqrt_coupling();
    const Real disc = Real(2) * gap * ((Real(1) + s) * (Real(1) + s) - Real(2) * hbar);
    const Real x_plus_sq = Real(4) * hbar / (Real(1) - c + Real(2) * hbar + sqrt(disc));
    const Real d_plus = gap + sqrt(gap * gap + Real(2) * gap * s);
    return {hbar, gap, sqrt(x_plus_sq), d_plus};
}
} // namespace detail

/// Level with energy hbar in (0, hbar*].
template <class Real>
EnergyLevel<Real> level_from_energy(const Real &hbar, const ModelParams<Real> &params) {
    if (!(hbar > 0) || hbar > params.hbar_star()) {
        throw RangeError("energy outside (0, hbar*]");
    }
    return detail::make_level(hbar, params.hbar_star() - hbar, params);
}

/// Level at distance gap = hbar* - hbar below the saddle loop, gap in [0, hbar*).
template <class Real>
EnergyLevel<Real> level_from_gap(const Real &gap, const ModelParams<Real> &params) {
    if (gap < 0 || !(gap < params.hbar_star())) {
        throw RangeError("separatrix gap outside [0, hbar*)");
    }
    return detail::make_level(params.hbar_star() - gap, gap, params);
}

/// x+(hbar): unique root of E(x) = hbar on (0, x*].
template <class Real>
Real turning_point(const Real &hbar, const ModelParams<Real> &params) {
    return level_from_energy(hbar, params).x_plus;
}

} // namespace combdrive
