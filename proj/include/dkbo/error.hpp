#pragma once

#include <stdexcept>
#include <string>

namespace dkbo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file content (wrong magic, ragged rows, bad header).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates a data invariant (non-finite value, duplicate id).
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Cholesky failed even at the largest jitter rung.
class SingularKernelError : public Error {
public:
    SingularKernelError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

/// No candidates left to select from.
class ExhaustedError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SessionError : public Error {
public:
    using Error::Error;
};

} // namespace dkbo
