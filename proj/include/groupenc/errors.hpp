#pragma once

#include <stdexcept>
#include <string>

namespace groupenc {

// Error taxonomy used across the library. The CLI maps FormatError and
// ConfigError to exit code 2, everything else to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Matrix/vector dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid configuration or flag combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Unparseable or corrupt file content.
class FormatError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Operation invoked with missing or stale internal state.
class StateError : public Error {
public:
    using Error::Error;
};

} // namespace groupenc
