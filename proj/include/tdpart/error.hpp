#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tdpart {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a domain invariant (duplicate ids, rank gaps, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Invalid strategy parameters or command-line configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file content. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message), line_(line)
    {
    }

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Mismatched inputs handed to an evaluation routine.
class InputError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class BackendUnavailableError : public BackendError {
public:
    using BackendError::BackendError;
};

class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

class ScriptError : public BackendError {
public:
    using BackendError::BackendError;
};

/// Judged pools too small for the requested synthetic window.
class EligibilityError : public Error {
public:
    using Error::Error;
};

}  // namespace tdpart
