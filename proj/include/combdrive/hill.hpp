// Linear stability of periodic solutions through the Hill equation
//
//     psi'' + q(t) psi = 0,   q(t) = dF/dx (x(t), t, delta),
//
// and the trace of its monodromy matrix over one forcing window m Tv.
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/flow.hpp"
#include "combdrive/model.hpp"
#include "combdrive/numerics/dopri5.hpp"
#include "combdrive/numerics/taylor.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace combdrive {

// =============================================================================
// Types
// =============================================================================

template <class Real = Precise>
struct Monodromy {
    Real psi1_T;
    Real dpsi1_T;
    Real psi2_T;
    Real dpsi2_T;
    Real trace;           ///< psi1(T) + psi2'(T)
    Real period_used;     ///< m Tv
    Real determinant;     ///< Wronskian at T, 1 by Liouville
    Real base_residual;   ///< |state(T) - state(0)| of the base solution
    std::size_t steps = 0;

    template <class To>
    Monodromy<To> cast() const {
        return {real_cast<To>(psi1_T), real_cast<To>(dpsi1_T), real_cast<To>(psi2_T),
                real_cast<To>(dpsi2_T), real_cast<To>(trace), real_cast<To>(period_used),
                real_cast<To>(determinant), real_cast<To>(base_residual), steps};
    }
};

enum class StabilityKind { Elliptic, Hyperbolic, Parabolic, Undetermined };
enum class VerdictSource { NumericalTrace, FirstOrderCriterion, TheoremPrediction };

inline const char *to_string(StabilityKind k) {
    switch (k) {
    case StabilityKind::Elliptic: return "elliptic";
    case StabilityKind::Hyperbolic: return "hyperbolic";
    case StabilityKind::Parabolic: return "parabolic";
    default: return "undetermined";
    }
}

inline const char *to_string(VerdictSource s) {
    switch (s) {
    case VerdictSource::NumericalTrace: return "numerical-trace";
    case VerdictSource::FirstOrderCriterion: return "first-order-criterion";
    default: return "theorem-prediction";
    }
}

struct StabilityVerdict {
    StabilityKind kind;
    double trace;
    VerdictSource source;
};

/// |trace| < 2 - tol elliptic, |trace| > 2 + tol hyperbolic, otherwise parabolic.
inline StabilityVerdict classify(double trace, double tol = 1e-9) {
    if (!(tol > 0)) throw InvalidParameters("classification tolerance must be positive");
    const double a = std::abs(trace);
    StabilityKind k = StabilityKind::Parabolic;
    if (a < 2.0 - tol) k = StabilityKind::Elliptic;
    else if (a > 2.0 + tol) k = StabilityKind::Hyperbolic;
    return {k, trace, VerdictSource::NumericalTrace};
}

// =============================================================================
// Hill potential
// =============================================================================

/// q(t) = dF/dx along a base solution, evaluated through its dense output.
template <class Real, class Solution>
class HillPotential {
  public:
    HillPotential(const Solution &path, ModelParams<Real> params, DriveSpec<Real> drive)
        : path_(&path), params_(std::move(params)), drive_(std::move(drive)) {}

    Real operator()(const Real &t) const {
        return dforce_dx(path_->at(t)[0], t, params_, drive_);
    }

  private:
    const Solution *path_;
    ModelParams<Real> params_;
    DriveSpec<Real> drive_;
};

template <class Real, class Solution>
HillPotential<Real, Solution> hill_potential(const Solution &path, const DriveSpec<Real> &drive,
                                             const ModelParams<Real> &params) {
    return HillPotential<Real, Solution>(path, params, drive);
}

// =============================================================================
// Monodromy
// =============================================================================

/// Co-integrates the base flow with the normalized fundamental solutions
/// (psi1, psi1')(0) = (1, 0), (psi2, psi2')(0) = (0, 1) over [0, m Tv] with
/// the Taylor integrator. Rejects base solutions whose return residual
/// exceeds `periodicity_tol`.
template <class Real>
Monodromy<Real> monodromy(const State<Real, 2> &initial, const DriveSpec<Real> &drive,
                          const ModelParams<Real> &params, int m,
                          const Real &periodicity_tol = Real(1e-7)) {
    using std::abs;
    if (m < 1) throw InvalidParameters("m must be >= 1");
    const Real T = Real(m) * params.tv();
    const State<Real, 6> y0{initial[0], initial[1], Real(1), Real(0), Real(0), Real(1)};
    numerics::TaylorOptions<Real> opt;
    opt.dense = false;
    const auto sol = numerics::integrate_taylor(CombJet<Real, 6>(params, drive), y0, Real(0), T, opt);
    const auto &y = sol.final_state();
    Monodromy<Real> out;
    out.psi1_T = y[2];
    out.dpsi1_T = y[3];
    out.psi2_T = y[4];
    out.dpsi2_T = y[5];
    out.trace = y[2] + y[5];
    out.period_used = T;
    out.determinant = y[2] * y[5] - y[3] * y[4];
    out.base_residual = std::max(abs(y[0] - initial[0]), abs(y[1] - initial[1]));
    out.steps = sol.steps();
    if (!(out.base_residual <= periodicity_tol)) {
        throw PeriodicityError("base solution is not m Tv-periodic: return residual " +
                               std::to_string(to_double(out.base_residual)));
    }
    return out;
}

/// Wronskian psi1 psi2' - psi1' psi2 at `points` interior times of [0, m Tv].
template <class Real>
std::vector<Real> wronskian_profile(const State<Real, 2> &initial, const DriveSpec<Real> &drive,
                                    const ModelParams<Real> &params, int m, int points = 10) {
    const Real T = Real(m) * params.tv();
    const State<Real, 6> y0{initial[0], initial[1], Real(1), Real(0), Real(0), Real(1)};
    const auto sol = numerics::integrate_taylor(CombJet<Real, 6>(params, drive), y0, Real(0), T);
    std::vector<Real> w;
    for (int k = 1; k <= points; ++k) {
        const auto y = sol.at(T * Real(k) / Real(points + 1));
        w.push_back(y[2] * y[5] - y[3] * y[4]);
    }
    return w;
}

/// Independent path: the 2x2 state-transition matrix integrated as a matrix
/// ODE with the Dormand-Prince pair. Returns the same record.
template <class Real>
Monodromy<Real> monodromy_matrix_flow(const State<Real, 2> &initial, const DriveSpec<Real> &drive,
                                      const ModelParams<Real> &params, int m, const Real &rel_tol,
                                      const Real &abs_tol) {
    using std::abs;
    const Real T = Real(m) * params.tv();
    const State<Real, 6> y0{initial[0], initial[1], Real(1), Real(0), Real(0), Real(1)};
    const auto sol = numerics::integrate_ivp(CombMatrixField<Real>{params, drive}, y0, Real(0), T,
                                             rel_tol, abs_tol);
    const auto &y = sol.final_state();
    // Phi = (a b; c d): first column is psi1, second is psi2.
    Monodromy<Real> out;
    out.psi1_T = y[2];
    out.psi2_T = y[3];
    out.dpsi1_T = y[4];
    out.dpsi2_T = y[5];
    out.trace = y[2] + y[5];
    out.period_used = T;
    out.determinant = y[2] * y[5] - y[3] * y[4];
    out.base_residual = std::max(abs(y[0] - initial[0]), abs(y[1] - initial[1]));
    out.steps = sol.stats().accepted;
    return out;
}

} // namespace combdrive
