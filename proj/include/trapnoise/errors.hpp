#ifndef TRAPNOISE_ERRORS_HPP
#define TRAPNOISE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace trapnoise {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (layout, measurement CSV, voltage table).
struct ParseError : Error {
    using Error::Error;
};

// Structurally valid input violating a domain invariant (overlapping
// electrodes, empty RF set, missing CENTER, ...).
struct ValidationError : Error {
    using Error::Error;
};

// Evaluation requested outside the physical domain (z <= 0, bias >= 0, ...).
struct DomainError : Error {
    using Error::Error;
};

// Iterative solver exhausted its iteration budget.
struct NonConvergence : Error {
    using Error::Error;
};

// Equilibrium Hessian not positive definite; no stable trap at this point.
struct UnstablePoint : Error {
    using Error::Error;
};

// Adaptive quadrature failed to reach the requested tolerance.
struct QuadratureFailure : Error {
    using Error::Error;
};

// Fewer measurements / distinct angles than free fit parameters.
struct InsufficientData : Error {
    using Error::Error;
};

// Surface/technical ratio denominator vanishes; extraction undefined.
struct DegenerateDenominator : Error {
    using Error::Error;
};

// PSD tensor orthogonal to the radial plane; no ratio can be formed.
struct DegenerateProjection : Error {
    using Error::Error;
};

} // namespace trapnoise

#endif
