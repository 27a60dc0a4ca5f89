// Independent reference computations used only by the tests. Each one is
// deliberately built from a different formula or algorithm than the
// library path it checks.
#pragma once

#include "combdrive/model.hpp"
#include "combdrive/numerics/dopri5.hpp"

#include <cmath>
#include <functional>

namespace oracle {

/// Energy straight from its textbook form, no algebraic rewriting.
inline long double raw_energy(long double x, long double beta, long double v0) {
    const long double k = 2.0L * beta * v0 * v0;
    return x * x / 2.0L - k / (1.0L - x * x) + k;
}

/// Plain bisection for E(x) = h on [0, x*], run until the bracket collapses.
inline double bisect_turning_point(double h, double beta, double v0) {
    long double lo = 0.0L;
    long double hi = std::sqrt(1.0L - 2.0L * v0 * std::sqrt((long double)beta));
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        if (raw_energy(mid, beta, v0) < h) lo = mid; else hi = mid;
    }
    return static_cast<double>(0.5L * (lo + hi));
}

/// Central difference of a scalar function.
inline double central_diff(const std::function<double(double)> &f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Time of flight: start at (0, sqrt(2h)) and return to the x = 0 section
/// moving upward. The crossing is located by bisection on the dense output.
inline double time_of_flight_period(double h, const combdrive::ModelParams<double> &p,
                                    double rtol = 1e-13) {
    using namespace combdrive;
    const double k4 = 4.0 * p.beta() * p.v0() * p.v0();
    const auto field = [k4](double, const numerics::State<double, 2> &y) {
        const double d = 1.0 - y[0] * y[0];
        return numerics::State<double, 2>{y[1], -y[0] + k4 * y[0] / (d * d)};
    };
    const numerics::State<double, 2> y0{0.0, std::sqrt(2.0 * h)};
    // Integrate in chunks until the first upward crossing of x = 0.
    double t0 = 0.0;
    numerics::State<double, 2> y = y0;
    const double chunk = 4.0;
    for (int k = 0; k < 10000; ++k) {
        auto sol = numerics::integrate_ivp(field, y, t0, t0 + chunk, rtol, 1e-15);
        const auto &ts = sol.times();
        const auto &ys = sol.states();
        for (std::size_t i = 1; i < ts.size(); ++i) {
            if (ys[i - 1][0] < 0 && ys[i][0] >= 0) {
                double a = ts[i - 1], b = ts[i];
                for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
                    const double m = 0.5 * (a + b);
                    if (sol.at(m)[0] < 0) a = m; else b = m;
                }
                return 0.5 * (a + b);
            }
        }
        t0 += chunk;
        y = sol.final_state();
    }
    return NAN;
}

} // namespace oracle
