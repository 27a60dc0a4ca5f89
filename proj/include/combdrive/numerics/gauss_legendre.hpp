#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"

#include <cmath>
#include <vector>

namespace combdrive::numerics {

/// Gauss-Legendre rule on [-1, 1].
template <class Real>
struct GaussRule {
    std::vector<Real> nodes;
    std::vector<Real> weights;

    std::size_t size() const { return nodes.size(); }
};

/// Nodes and weights of the n-point rule, computed by Newton iteration on the
/// three-term recurrence in the working precision. Exact for polynomials of
/// degree <= 2n - 1.
template <class Real>
GaussRule<Real> gauss_legendre(int n) {
    using std::abs;
    using std::cos;
    if (n < 1) {
        throw InvalidParameters("Gauss-Legendre rule needs n >= 1");
    }
    GaussRule<Real> rule;
    rule.nodes.assign(n, Real(0));
    rule.weights.assign(n, Real(0));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton.
        Real z = cos(pi<Real>() * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
        Real dp = 0;
        for (int it = 0; it < 100; ++it) {
            Real p0 = 1;
            Real p1 = z;
            for (int k = 2; k <= n; ++k) {
                const Real p2 = (Real(2 * k - 1) * z * p1 - Real(k - 1) * p0) / Real(k);
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = Real(n) * (z * p1 - p0) / (z * z - Real(1));
            const Real dz = p1 / dp;
            z -= dz;
            if (abs(dz) <= Real(4) * epsilon<Real>()) {
                break;
            }
        }
        // Recompute the derivative at the converged node.
        Real p0 = 1;
        Real p1 = z;
        for (int k = 2; k <= n; ++k) {
            const Real p2 = (Real(2 * k - 1) * z * p1 - Real(k - 1) * p0) / Real(k);
            p0 = p1;
            p1 = p2;
        }
        if (n == 1) {
            dp = 1;
        } else {
            dp = Real(n) * (z * p1 - p0) / (z * z - Real(1));
        }
        const Real w = Real(2) / ((Real(1) - z * z) * dp * dp);
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0;
    }
    return rule;
}

/// Shared 20-point rule, built once per scalar type.
template <class Real>
const GaussRule<Real> &gauss20() {
    static const GaussRule<Real> rule = gauss_legendre<Real>(20);
    return rule;
}

} // namespace combdrive::numerics
