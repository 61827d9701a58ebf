#pragma once

#include <stdexcept>
#include <string>

namespace transmc {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition or shape violation on caller-supplied data.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// The solver produced a non-finite objective or its step parameter blew up.
class SolverDiverged : public Error {
public:
    using Error::Error;
};

/// Malformed frame, manifest or config file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace transmc
