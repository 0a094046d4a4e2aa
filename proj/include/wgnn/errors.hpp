#ifndef WGNN_ERRORS_HPP
#define WGNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wgnn {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or size mismatch between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// Non-finite value detected at an operation boundary.
struct NumericError : Error {
    using Error::Error;
};

/// Invalid or inconsistent configuration.
struct ConfigError : Error {
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

/// Problem size outside supported bounds (e.g. exhaustive-search guard).
struct SizeError : Error {
    using Error::Error;
};

/// API contract violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

/// Randomized generation failed to produce a valid object within bounded retries.
struct GenerationError : Error {
    using Error::Error;
};

} // namespace wgnn

#endif
