#pragma once

#include <stdexcept>
#include <string>

namespace sand {

/// Base class of every exception thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shape or broadcast mismatch.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A call violated an API precondition (wrong mode, bad label, non-scalar root, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid user-facing configuration (train config, CLI flags, dataset specs).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file.
class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A combinatorial guard was exceeded (e.g. too many subsets to enumerate).
class SizeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A synthetic generator could not satisfy its geometric constraints.
class GenerationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Numeric failure at runtime (non-finite loss or gradient).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Gain vector collapsed to (near) zero norm; training state is unusable.
class DegenerateGainsError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Normal-equations system is numerically singular.
class SingularSystemError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace sand
