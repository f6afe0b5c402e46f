#pragma once

#include <stdexcept>
#include <string>

namespace ctxmat {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Incompatible matrix/series shapes.
struct DimensionError : Error {
    using Error::Error;
};

/// A series is shorter than an operation requires.
struct TooShortError : Error {
    using Error::Error;
};

/// Empty input where at least one element is required.
struct EmptyInputError : Error {
    using Error::Error;
};

/// A channel has (near-)zero variance where a positive variance is required.
struct DegenerateVarianceError : Error {
    using Error::Error;
};

/// A summary feature is undefined for the given matrix (e.g. all-zero mass).
struct UndefinedFeatureError : Error {
    using Error::Error;
};

/// Invalid configuration or invalid metric identifier.
struct ConfigError : Error {
    using Error::Error;
};

/// A regression system is singular even after the first-difference retry.
struct SingularityError : Error {
    using Error::Error;
};

}  // namespace ctxmat
