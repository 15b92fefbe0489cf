#pragma once

#include <stdexcept>
#include <string>

namespace gwr {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Vector lengths that do not agree with the receiving structure.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Input values outside an operation's domain (NaN, out-of-range fractions, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Operation not valid in the current state (uninitialized network, untrained layer).
class StateError : public Error {
public:
    using Error::Error;
};

// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed file contents.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace gwr
