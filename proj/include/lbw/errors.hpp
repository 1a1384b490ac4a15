#pragma once

#include <stdexcept>
#include <string>

namespace lbw {

// Bad input or configuration. CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numerical diagnostic refused to produce a result. CLI exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// |p - q| too small for the FCFS closed forms; use the generic solver.
struct DegenerateParameters : NumericalError {
    using NumericalError::NumericalError;
};

// Cumulative-mass increment not certifiably positive.
struct DegeneracyError : NumericalError {
    using NumericalError::NumericalError;
};

struct MonotonicityViolation : NumericalError {
    using NumericalError::NumericalError;
};

struct SingularSolve : NumericalError {
    using NumericalError::NumericalError;
};

struct TableRangeError : NumericalError {
    using NumericalError::NumericalError;
};

struct TruncationError : NumericalError {
    using NumericalError::NumericalError;
};

struct OverflowError : NumericalError {
    using NumericalError::NumericalError;
};

// Iterative method hit its iteration cap. CLI exit code 4.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lbw
