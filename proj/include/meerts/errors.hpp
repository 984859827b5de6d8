#pragma once

#include <stdexcept>
#include <string>

namespace meerts {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions, unknown names, or malformed configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Parameter outside the domain of a function (sigma <= 0, lambda > 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Factorization or solve failure that regularization could not repair.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace meerts
