// End-to-end verification of the model: the period function, the
// autonomous orbits, their monodromy, the first-order trace derivative and
// the forced families. Each criterion is timed and reported separately.
#pragma once

#include "combdrive/continuation.hpp"
#include "combdrive/core/parallel.hpp"
#include "combdrive/core/real.hpp"
#include "combdrive/firstorder.hpp"
#include "combdrive/hill.hpp"
#include "combdrive/model.hpp"
#include "combdrive/numerics/dopri5.hpp"
#include "combdrive/orbits.hpp"
#include "combdrive/period.hpp"
#include "combdrive/report.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace combdrive {

// =============================================================================
// Options and results
// =============================================================================

struct VerifyOptions {
    int workers = 1;
    /// Replace the Taylor integrator by a loose Dormand-Prince run in the
    /// orbit and monodromy criteria. A correct verifier must then fail.
    bool loosened = false;
    double loose_rel_tol = 1e-4;
    int m_max = 5;
    std::vector<double> delta_grid = default_delta_grid();
    std::set<int> only;  ///< criteria to run, empty for all
};

struct CriterionResult {
    int id = 0;
    std::string title;
    Report report;
    double seconds = 0;
    double budget = 0;  ///< wall-clock limit in seconds, 0 for none
    std::string error;  ///< exception text if the criterion could not run

    bool within_budget() const { return budget <= 0 || seconds <= budget; }
    bool passed() const { return error.empty() && report.passed() && within_budget(); }
};

struct VerificationResult {
    std::vector<CriterionResult> criteria;

    bool passed() const {
        for (const auto &c : criteria) {
            if (!c.passed()) return false;
        }
        return !criteria.empty();
    }
};

namespace detail {

inline std::string pair_label(Symmetry sym, int m, int p) {
    return std::string(to_string(sym)) + " (" + std::to_string(m) + "," + std::to_string(p) + ")";
}

/// Return residual, energy drift and zero count of an autonomous orbit over
/// one forcing window with a loose Dormand-Prince run in double precision.
struct LooseOrbit {
    double return_state = 0;
    double energy_drift = 0;
    int zeros = 0;
};

inline LooseOrbit loose_orbit(const AutonomousOrbit<Precise> &o, const ModelParams<double> &params,
                              double rel_tol) {
    const auto y0q = o.initial_state();
    const State<double, 2> y0{to_double(y0q[0]), to_double(y0q[1])};
    const double window = static_cast<double>(o.m) * params.tv();
    const auto sol = numerics::integrate_ivp(CombField<double>{params, DriveSpec<double>{}}, y0, 0.0,
                                             window, rel_tol, rel_tol * 1e-2);
    const double hbar = to_double(o.hbar());
    LooseOrbit out;
    const auto &yT = sol.final_state();
    out.return_state = std::max(std::abs(yT[0] - y0[0]), std::abs(yT[1] - y0[1]));
    const int samples = 400 * o.p;
    double prev = y0[0];
    for (int k = 0; k <= samples; ++k) {
        const auto y = sol.at(window * k / samples);
        out.energy_drift = std::max(out.energy_drift, std::abs(hamiltonian(y[0], y[1], params) - hbar));
        // Zeros on [0, window): the odd start counts, the return does not.
        if (k == 0) {
            if (y[0] == 0) ++out.zeros;
        } else if (k < samples && ((prev < 0 && y[0] >= 0) || (prev > 0 && y[0] <= 0))) {
            if (y[0] != 0 || prev != 0) ++out.zeros;
        }
        prev = y[0];
    }
    return out;
}

} // namespace detail

// =============================================================================
// Criteria
// =============================================================================

/// 1. Small-energy limit of the period.
inline Report criterion_period_limit(const ModelParams<double> &params) {
    return check_period_limit(params, 1e-4);
}

/// 2. Growth of the period toward the saddle loop.
inline Report criterion_period_growth(const ModelParams<double> &params) {
    return check_period_growth(params);
}

/// 3. T' > 0 on 100 log-spaced energies, matching centered differences.
inline Report criterion_period_derivative(const ModelParams<double> &params) {
    return check_period_derivative(params, 100, 1e-6);
}

/// 4. Symmetries, zero count, energy and period of every admissible orbit.
inline Report criterion_orbits(const ModelParams<double> &params, const VerifyOptions &opt) {
    const auto q = params.cast<Precise>();
    const auto pairs = admissible_pairs(opt.m_max, params);
    struct Job {
        Symmetry sym;
        int m, p;
    };
    std::vector<Job> jobs;
    for (const auto &[m, p] : pairs) {
        for (auto sym : {Symmetry::Odd, Symmetry::Even}) jobs.push_back({sym, m, p});
    }
    std::vector<Report> parts(jobs.size());
    parallel_for(jobs.size(), opt.workers, [&](std::size_t i) {
        const auto &j = jobs[i];
        const auto o = make_orbit<Precise>(j.sym, j.m, j.p, q);
        const std::string label = detail::pair_label(j.sym, j.m, j.p);
        Report &r = parts[i];
        if (opt.loosened) {
            const auto lo = detail::loose_orbit(o, params, opt.loose_rel_tol);
            r.add(label + ": return residual (loose integrator)", lo.return_state <= 1e-8,
                  lo.return_state, 1e-8);
            r.add(label + ": energy drift (loose integrator)", lo.energy_drift <= 1e-9,
                  lo.energy_drift, 1e-9);
            r.add(label + ": zeros on one window (loose integrator)", lo.zeros == 2 * j.p, lo.zeros,
                  2 * j.p);
            return;
        }
        const auto s = symmetry_residuals(o);
        const double sym_res = to_double(s.worst_symmetry());
        const double ret = to_double(s.return_state);
        const double res = std::max(sym_res, ret);
        r.add(label + ": symmetry and return residuals", res <= 1e-8, res, 1e-8);
        r.add(label + ": zeros on one window", s.zeros == 2 * j.p && !s.tangency_warning, s.zeros,
              2 * j.p);
        r.add(label + ": energy drift", to_double(s.energy_drift) <= 1e-9, to_double(s.energy_drift),
              1e-9);
        r.add(label + ": period error", to_double(s.period_error) <= 1e-9, to_double(s.period_error),
              1e-9, "relative");
    });
    Report out;
    for (const auto &p : parts) out.append(p);
    return out;
}

/// 5. tau(0) = 2 for every admissible orbit.
inline Report criterion_autonomous_trace(const ModelParams<double> &params, const VerifyOptions &opt) {
    const auto q = params.cast<Precise>();
    const auto pairs = admissible_pairs(opt.m_max, params);
    std::vector<std::pair<std::pair<int, int>, Symmetry>> jobs;
    for (const auto &mp : pairs) {
        for (auto sym : {Symmetry::Odd, Symmetry::Even}) jobs.push_back({mp, sym});
    }
    std::vector<Report> parts(jobs.size());
    parallel_for(jobs.size(), opt.workers, [&](std::size_t i) {
        const auto [mp, sym] = jobs[i];
        const auto [m, p] = mp;
        const auto o = make_orbit<Precise>(sym, m, p, q);
        double trace = 0;
        if (opt.loosened) {
            const auto y0q = o.initial_state();
            const State<double, 2> y0{to_double(y0q[0]), to_double(y0q[1])};
            trace = monodromy_matrix_flow(y0, DriveSpec<double>{}, params, m, opt.loose_rel_tol,
                                          opt.loose_rel_tol * 1e-2)
                        .trace;
        } else {
            trace = to_double(monodromy(o.initial_state(), DriveSpec<Precise>{}, q, m).trace);
        }
        const double err = std::abs(trace - 2.0);
        parts[i].add(detail::pair_label(sym, m, p) + ": |tau(0) - 2|", err <= 1e-6, err, 1e-6,
                     opt.loosened ? "loose integrator" : "");
    });
    Report out;
    for (const auto &p : parts) out.append(p);
    return out;
}

/// 6. The three first-order methods agree, and the even derivative is
/// (-1)^n times the odd one, for (2n, 1), n = 1..4.
inline Report criterion_methods(const ModelParams<double> &params) {
    Report out;
    for (int n = 1; n <= 4; ++n) {
        const auto odd = tau_prime_odd(2 * n, 1, params);
        const auto even = tau_prime_even(2 * n, 1, params);
        const std::string tag = "n = " + std::to_string(n);
        out.add(tag + ": odd methods agree", odd.quarter && odd.spread() <= 1e-8, odd.spread(), 1e-8,
                "relative spread of general, cosine and quarter forms");
        out.add(tag + ": even methods agree", even.quarter && even.spread() <= 1e-8, even.spread(),
                1e-8, "relative spread of general, cosine and quarter forms");
        const double sign = n % 2 ? -1.0 : 1.0;
        const double rel = std::abs(even.value() - sign * odd.value()) / std::abs(odd.value());
        out.add(tag + ": even tau' = (-1)^n odd tau'", rel <= 1e-8, rel, 1e-8, "relative");
    }
    return out;
}

/// 7. Odd tau'_n alternates -, +, -, + for n = 1..4 under the frequency
/// condition.
inline Report criterion_odd_signs(const ModelParams<double> &params) {
    Report out;
    for (int n = 1; n <= 4; ++n) {
        const bool freq = frequency_condition(n, params);
        out.add("n = " + std::to_string(n) + ": frequency condition", freq, params.omega0(),
                2.0 * n * std::sqrt(1.0 - params.coupling()), "omega0 < 2n sqrt(1 - 4 beta V0^2)");
        const auto tp = tau_prime_odd(2 * n, 1, params);
        const bool want_negative = n % 2 == 1;
        out.add("n = " + std::to_string(n) + ": odd tau' " + (want_negative ? "< 0" : "> 0"),
                want_negative ? tp.value() < 0 : tp.value() > 0, tp.value(), 0.0);
    }
    return out;
}

/// 8. Even tau'_n > 0 for n = 1..4.
inline Report criterion_even_signs(const ModelParams<double> &params) {
    Report out;
    for (int n = 1; n <= 4; ++n) {
        const auto tp = tau_prime_even(2 * n, 1, params);
        out.add("n = " + std::to_string(n) + ": even tau' > 0", tp.value() > 0, tp.value(), 0.0);
    }
    return out;
}

/// 9. tau' vanishes when m / (2p) is not an integer.
inline Report criterion_delicate(const ModelParams<double> &params, const VerifyOptions &opt) {
    Report out;
    for (const auto &[m, p] : admissible_pairs(opt.m_max, params)) {
        if (harmonic_index(m, p) != 0) continue;
        for (auto sym : {Symmetry::Odd, Symmetry::Even}) {
            const auto tp = tau_prime(sym, m, p, params);
            out.add(detail::pair_label(sym, m, p) + ": |tau'| / scale", tp.relative_size() <= 1e-8,
                    tp.relative_size(), 1e-8);
        }
    }
    return out;
}

/// 10. Convexity certificate for G_n along the (2n, 1) orbit, n = 1..4.
inline Report criterion_convexity(const ModelParams<double> &params, const VerifyOptions &opt) {
    const auto q = params.cast<Precise>();
    std::vector<ConvexityCertificate> certs(4);
    parallel_for(4, opt.workers, [&](std::size_t i) {
        certs[i] = convexity_certificate(static_cast<int>(i) + 1, q);
    });
    Report out;
    for (const auto &c : certs) {
        const std::string tag = "n = " + std::to_string(c.n);
        out.add(tag + ": U > 0 on [y1, 1]", c.u_min > 0, c.u_min, 0.0,
                "grid of " + std::to_string(c.grid) + " points, minimum at Y = " +
                    std::to_string(c.u_argmin));
        out.add(tag + ": U(0) = 20 beta V0^2", c.u_at_zero_error <= 1e-12, c.u_at_zero_error, 1e-12);
        out.add(tag + ": U(1) = 2 hbar", c.u_at_one_error <= 1e-12, c.u_at_one_error, 1e-12);
        out.add(tag + ": y1 = 1 - x+^2", c.y1_error <= 1e-10, c.y1_error, 1e-10);
    }
    return out;
}

/// 11. Finite-difference slope of tau(delta) against the analytic tau'.
inline Report criterion_fd_slope(const ModelParams<double> &params, const VerifyOptions &opt) {
    const auto q = params.cast<Precise>();
    struct Job {
        Symmetry sym;
        int m;
    };
    const std::vector<Job> jobs{{Symmetry::Odd, 2}, {Symmetry::Even, 2}, {Symmetry::Odd, 4},
                                {Symmetry::Even, 4}};
    std::vector<Report> parts(jobs.size());
    parallel_for(jobs.size(), opt.workers, [&](std::size_t i) {
        const auto &j = jobs[i];
        const std::string label = detail::pair_label(j.sym, j.m, 1);
        try {
            // The linear regime of (4,1) is far narrower than 1e-4; refine h
            // until the Richardson slope settles.
            const auto fd = j.m == 2 ? trace_slope_fd<Precise>(j.sym, j.m, 1, q)
                                     : trace_slope_refined<Precise>(j.sym, j.m, 1, q);
            const double an = tau_prime(j.sym, j.m, 1, params).value();
            const double slope = to_double(fd.slope);
            const double rel = std::abs(slope - an) / std::abs(an);
            parts[i].add(label + ": FD slope vs analytic tau'", rel <= 1e-2 && fd.h <= Precise(2e-4),
                         rel, 1e-2,
                         "FD " + std::to_string(slope) + " at h = " + std::to_string(to_double(fd.h)) +
                             ", analytic " + std::to_string(an));
        } catch (const std::exception &e) {
            parts[i].add(label + ": FD slope vs analytic tau'", false, 0.0, 1e-2, e.what());
        }
    });
    Report out;
    for (const auto &p : parts) out.append(p);
    return out;
}

/// 12. Along the forced families on the amplitude grid, |tau| - 2 has the
/// sign the theorems predict.
inline Report criterion_families(const ModelParams<double> &params, const VerifyOptions &opt) {
    const auto q = params.cast<Precise>();
    std::vector<Precise> grid;
    for (double d : opt.delta_grid) grid.push_back(Precise(d));
    struct Job {
        Symmetry sym;
        int m;
    };
    const std::vector<Job> jobs{{Symmetry::Odd, 2}, {Symmetry::Even, 2}, {Symmetry::Odd, 4},
                                {Symmetry::Even, 4}};
    std::vector<Report> parts(jobs.size());
    parallel_for(jobs.size(), opt.workers, [&](std::size_t i) {
        const auto &j = jobs[i];
        const std::string label = detail::pair_label(j.sym, j.m, 1);
        const auto pred = predict_stability(j.sym, j.m, 1, params);
        const auto fam = continue_family<Precise>(j.sym, j.m, 1, q, grid);
        int checked = 0, mismatches = 0;
        double first_bad = 0;
        std::string traces;
        for (const auto &pt : fam.points) {
            const double delta = to_double(pt.orbit.delta);
            if (!(delta > 0)) continue;
            ++checked;
            const double tau = to_double(pt.orbit.trace());
            traces += (traces.empty() ? "" : ", ") + std::to_string(delta) + ":" + std::to_string(tau);
            if (pt.verdict.kind != pred.kind) {
                if (mismatches == 0) first_bad = delta;
                ++mismatches;
            }
        }
        std::string detail = std::string("predicted ") + to_string(pred.kind) + "; tau by delta " +
                             traces;
        if (!fam.complete) detail += "; family stopped at delta = " + std::to_string(*fam.failed_delta);
        if (mismatches > 0) detail += "; first mismatch at delta = " + std::to_string(first_bad);
        parts[i].add(label + ": sign of |tau| - 2 matches prediction",
                     fam.complete && mismatches == 0 && checked > 0, mismatches, 0.0, detail);
    });
    Report out;
    for (const auto &p : parts) out.append(p);
    return out;
}

// =============================================================================
// Driver
// =============================================================================

struct CriterionSpec {
    int id;
    const char *title;
    double budget;
};

inline const std::vector<CriterionSpec> &criterion_specs() {
    static const std::vector<CriterionSpec> specs{
        {1, "period small-energy limit", 1.0},
        {2, "period growth toward the saddle loop", 5.0},
        {3, "period derivative positive and consistent", 10.0},
        {4, "autonomous orbit residuals, zeros, energy and period", 30.0},
        {5, "autonomous monodromy trace equals 2", 0.0},
        {6, "first-order methods agree, even/odd relation", 0.0},
        {7, "odd trace derivative signs alternate", 0.0},
        {8, "even trace derivative positive", 0.0},
        {9, "trace derivative vanishes in delicate cases", 0.0},
        {10, "convexity certificate", 0.0},
        {11, "finite-difference slope matches analytic", 120.0},
        {12, "family stability matches prediction", 0.0},
    };
    return specs;
}

/// Runs one criterion, timing it and converting library errors into a
/// failed result.
inline CriterionResult run_criterion(int id, const ModelParams<double> &params,
                                     const VerifyOptions &opt) {
    const auto &specs = criterion_specs();
    if (id < 1 || id > static_cast<int>(specs.size())) {
        throw InvalidParameters("unknown criterion " + std::to_string(id));
    }
    const auto &spec = specs[static_cast<std::size_t>(id - 1)];
    CriterionResult res;
    res.id = id;
    res.title = spec.title;
    res.budget = spec.budget;
    const auto start = std::chrono::steady_clock::now();
    try {
        switch (id) {
        case 1: res.report = criterion_period_limit(params); break;
        case 2: res.report = criterion_period_growth(params); break;
        case 3: res.report = criterion_period_derivative(params); break;
        case 4: res.report = criterion_orbits(params, opt); break;
        case 5: res.report = criterion_autonomous_trace(params, opt); break;
        case 6: res.report = criterion_methods(params); break;
        case 7: res.report = criterion_odd_signs(params); break;
        case 8: res.report = criterion_even_signs(params); break;
        case 9: res.report = criterion_delicate(params, opt); break;
        case 10: res.report = criterion_convexity(params, opt); break;
        case 11: res.report = criterion_fd_slope(params, opt); break;
        default: res.report = criterion_families(params, opt); break;
        }
    } catch (const std::exception &e) {
        res.error = e.what();
    }
    res.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

/// Runs the selected criteria in order. `on_result` is called after each.
inline VerificationResult verify_all(const ModelParams<double> &params, const VerifyOptions &opt = {},
                                     const std::function<void(const CriterionResult &)> &on_result = {}) {
    VerificationResult out;
    for (const auto &spec : criterion_specs()) {
        if (!opt.only.empty() && !opt.only.count(spec.id)) continue;
        out.criteria.push_back(run_criterion(spec.id, params, opt));
        if (on_result) on_result(out.criteria.back());
    }
    return out;
}

/// Negative control: criteria 4 and 5 rerun with a loosened integrator.
/// The control passes when both are rejected.
inline Report negative_control(const ModelParams<double> &params, const VerifyOptions &opt = {}) {
    VerifyOptions loose = opt;
    loose.loosened = true;
    Report out;
    for (int id : {4, 5}) {
        const auto r = run_criterion(id, params, loose);
        out.add("criterion " + std::to_string(id) + " rejects a loosened integrator (rtol " +
                    std::to_string(loose.loose_rel_tol) + ")",
                !r.passed(), static_cast<double>(r.report.failures()), 1.0,
                "failed checks under the loose integrator");
    }
    return out;
}

} // namespace combdrive
