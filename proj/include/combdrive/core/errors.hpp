#pragma once

#include <stdexcept>
#include <string>

namespace combdrive {

/// Argument outside the model's domain, e.g. |x| >= 1 (finger touches electrode).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Energy or period outside the range where periodic orbits exist.
struct RangeError : std::range_error {
    using std::range_error::range_error;
};

/// Parameters violate a model invariant (pull-in regime, delta >= Delta0, ...).
struct InvalidParameters : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// (m, p) does not satisfy 1 <= p <= nu_m.
struct InadmissibleError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidBracket : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Iterative method did not reach its tolerance.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Base solution of a monodromy computation does not return to its start.
struct PeriodicityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Adaptive integrator could not make progress; `t` is where it stalled.
struct StepUnderflow : ConvergenceError {
    StepUnderflow(const std::string &what, double t_) : ConvergenceError(what), t(t_) {}
    double t;
};

} // namespace combdrive
