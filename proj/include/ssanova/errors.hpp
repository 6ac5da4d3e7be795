#pragma once

#include <stdexcept>
#include <string>

namespace ssanova {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Caller-side problems: bad arguments, malformed files, inconsistent model
/// specifications. The CLI maps these to exit code 2.
struct UserError : Error {
    using Error::Error;
};

struct ArgumentError : UserError {
    using UserError::UserError;
};

/// CSV schema problems (missing/duplicate columns).
struct SchemaError : UserError {
    using UserError::UserError;
};

/// Unparseable cell content.
struct ParseError : UserError {
    using UserError::UserError;
};

/// Inconsistent ModelSpec (effect indices out of range, missing intercept, ...).
struct SpecError : UserError {
    using UserError::UserError;
};

/// Unusable data (non-finite values, constant covariate, too few rows).
struct DataError : UserError {
    using UserError::UserError;
};

/// Numerical breakdowns: factorization failure, degenerate fits/spectra.
/// The CLI maps these to exit code 3.
struct NumericalError : Error {
    using Error::Error;
};

} // namespace ssanova
