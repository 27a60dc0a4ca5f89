// Composite Gauss-Legendre quadrature with panel doubling.
#pragma once

#include "combdrive/core/errors.hpp"
#include "combdrive/core/real.hpp"
#include "combdrive/numerics/gauss_legendre.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace combdrive::numerics {

template <class Real>
struct QuadOptions {
    Real rel_tol = Tolerances<Real>::quad();
    Real abs_tol = Real(0);
    int max_doublings = 14;
};

template <class Real>
struct QuadResult {
    Real value;
    Real last_change;     ///< |I_k - I_{k-1}| at acceptance.
    std::size_t panels;   ///< panels in the accepted estimate.
    std::size_t evaluations;
};

/// Breakpoints on [a, b] refined geometrically toward b down to `width`.
/// Integrands with a boundary layer of that width at b are then resolved
/// with a fixed number of panels per decade.
template <class Real>
std::vector<Real> graded_mesh(const Real &a, const Real &b, const Real &width) {
    std::vector<Real> mesh{a};
    Real gap = (b - a) / Real(2);
    while (gap > width) {
        mesh.push_back(b - gap);
        gap /= Real(2);
    }
    mesh.push_back(b - gap);
    mesh.push_back(b);
    return mesh;
}

/// Mirror image of graded_mesh: breakpoints refined toward a.
template <class Real>
std::vector<Real> graded_mesh_at_start(const Real &a, const Real &b, const Real &width) {
    std::vector<Real> mesh{a};
    std::vector<Real> inner;
    Real gap = (b - a) / Real(2);
    while (gap > width) {
        inner.push_back(a + gap);
        gap /= Real(2);
    }
    inner.push_back(a + gap);
    mesh.insert(mesh.end(), inner.rbegin(), inner.rend());
    mesh.push_back(b);
    return mesh;
}

/// Sum of the 20-point rule over the given panels.
template <class Real, class F>
Real gauss_panels(const F &g, const std::vector<Real> &mesh) {
    const auto &rule = gauss20<Real>();
    Real total = 0;
    for (std::size_t k = 0; k + 1 < mesh.size(); ++k) {
        const Real mid = (mesh[k] + mesh[k + 1]) / Real(2);
        const Real half = (mesh[k + 1] - mesh[k]) / Real(2);
        Real s = 0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            s += rule.weights[i] * g(mid + half * rule.nodes[i]);
        }
        total += half * s;
    }
    return total;
}

/// Bisects every panel of the mesh.
template <class Real>
std::vector<Real> refine_mesh(const std::vector<Real> &mesh) {
    std::vector<Real> out;
    out.reserve(2 * mesh.size());
    for (std::size_t k = 0; k + 1 < mesh.size(); ++k) {
        out.push_back(mesh[k]);
        out.push_back((mesh[k] + mesh[k + 1]) / Real(2));
    }
    out.push_back(mesh.back());
    return out;
}

/// Integral of g over the span of `mesh`. Panels are doubled until two
/// successive estimates differ by at most max(abs_tol, rel_tol |I|).
/// Throws ConvergenceError after `max_doublings` refinements.
template <class Real, class F>
QuadResult<Real> quad_mesh(const F &g, std::vector<Real> mesh, const QuadOptions<Real> &opt = {}) {
    using std::abs;
    if (mesh.size() < 2) {
        throw InvalidParameters("quadrature mesh needs at least two points");
    }
    std::size_t evaluations = 20 * (mesh.size() - 1);
    Real prev = gauss_panels(g, mesh);
    for (int k = 0; k < opt.max_doublings; ++k) {
        mesh = refine_mesh(mesh);
        evaluations += 20 * (mesh.size() - 1);
        const Real cur = gauss_panels(g, mesh);
        const Real change = abs(cur - prev);
        const Real allowed = std::max(opt.abs_tol, opt.rel_tol * abs(cur));
        if (change <= allowed) {
            return {cur, change, mesh.size() - 1, evaluations};
        }
        prev = cur;
    }
    throw ConvergenceError("quadrature did not converge after " +
                           std::to_string(opt.max_doublings) + " panel doublings");
}

/// Integral of g over [0, pi/2]. The name reflects its use on integrands
/// whose endpoint singularity has been removed by x = x+ sin(theta).
template <class Real, class F>
QuadResult<Real> quad_regularized(const F &g, const QuadOptions<Real> &opt = {}) {
    return quad_mesh(g, std::vector<Real>{Real(0), pi<Real>() / Real(2)}, opt);
}

/// As above with a boundary layer of width `layer` at theta = pi/2.
template <class Real, class F>
QuadResult<Real> quad_regularized(const F &g, const Real &layer, const QuadOptions<Real> &opt) {
    return quad_mesh(g, graded_mesh(Real(0), pi<Real>() / Real(2), layer), opt);
}

} // namespace combdrive::numerics
