#ifndef MIXOPT_ERROR_HPP
#define MIXOPT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mixopt {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (CLI exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed, missing or invalid input data (CLI exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or other numerical breakdown (CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or parameter.
class DivergenceError : public NumericalError {
public:
    DivergenceError(int round, const std::string& what)
        : NumericalError("diverged in round " + std::to_string(round) + ": " + what),
          round_(round) {}

    int round() const noexcept { return round_; }

private:
    int round_;
};

/// Transport-level failure talking to the embedding service.
class NetworkError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace mixopt

#endif  // MIXOPT_ERROR_HPP
