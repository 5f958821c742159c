// errors.hpp — error taxonomy shared by all modules and the CLI exit-code map

#pragma once

#include <stdexcept>
#include <string>

namespace qbm {

// Base of everything thrown on purpose by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid physical or run configuration (bad spectral density, missing cutoff,
// negative mass, malformed config file ...).  CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// API misuse: mismatched grids, wrong array lengths, out-of-range arguments.
// CLI exit code 2.
struct UsageError : Error {
    using Error::Error;
};

// Numerical failures (exit code 3).
struct NumericalError : Error {
    using Error::Error;
};

// Fixed-step solution failed its residual check; carries a suggested step.
struct AccuracyError : NumericalError {
    AccuracyError(const std::string& msg, double suggested_ds)
        : NumericalError(msg), suggested_ds(suggested_ds) {}
    double suggested_ds;
};

// Conjugate point: the two-point boundary problem has no solution at this
// final time (v2(t) = 0).
struct SingularBoundaryError : NumericalError {
    SingularBoundaryError(const std::string& msg, double t)
        : NumericalError(msg), t(t) {}
    double t;
};

// Wronskian-like denominator vanished where a finite value was required.
struct DegeneracyError : NumericalError {
    using NumericalError::NumericalError;
};

// Oracle coefficient extraction hit an ill-conditioned linear system.
struct ExtractionError : NumericalError {
    using NumericalError::NumericalError;
};

// Pointwise evaluation impossible (singular covariance, ...).
struct EvaluationError : NumericalError {
    using NumericalError::NumericalError;
};

} // namespace qbm
