// Scalar types and constants shared by every module.
#pragma once

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/float128.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace combdrive {

/// Quad-precision scalar used for near-separatrix orbit work.
using Precise = boost::multiprecision::float128;

template <class Real>
inline Real pi() {
    return boost::math::constants::pi<Real>();
}

template <class Real>
inline Real two_pi() {
    return boost::math::constants::two_pi<Real>();
}

template <class Real>
inline Real sqrt2() {
    return boost::math::constants::root_two<Real>();
}

template <class Real>
inline Real epsilon() {
    return std::numeric_limits<Real>::epsilon();
}

template <class Real>
inline double to_double(const Real &x) {
    return static_cast<double>(x);
}

template <class To, class From>
inline To real_cast(const From &x) {
    return static_cast<To>(x);
}

/// True for scalars carrying well beyond double precision.
template <class Real>
constexpr bool is_extended() {
    return std::numeric_limits<Real>::digits > 64;
}

/// Default tolerances tied to the scalar's precision. Double and long double
/// get the library's documented defaults; wider types scale with epsilon.
template <class Real>
struct Tolerances {
    static Real ode_rel() { return is_extended<Real>() ? Real(64) * epsilon<Real>() : Real(1e-11); }
    static Real ode_abs() { return is_extended<Real>() ? Real(8) * epsilon<Real>() : Real(1e-12); }
    static Real quad() { return is_extended<Real>() ? Real(32) * epsilon<Real>() : Real(1e-13); }
    static Real root() { return is_extended<Real>() ? Real(8) * epsilon<Real>() : Real(1e-14); }
    /// Local tolerance for the Taylor integrator.
    static Real taylor() { return Real(4) * epsilon<Real>(); }
};

} // namespace combdrive
