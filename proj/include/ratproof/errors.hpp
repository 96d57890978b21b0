#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ratproof {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input (dyadic literal, circuit file, corpus, report).
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// An enumeration would exceed the configured bound.
class BoundExceeded : public Error {
public:
    using Error::Error;
};

/// Strict-majority instance whose acceptance fraction is exactly 1/2.
class TieNotAllowed : public Error {
public:
    using Error::Error;
};

/// A protocol violates its own declared shape (reward out of range, bad
/// resolution, non-dyadic belief, mismatched widths).
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A transcript no randomness can produce, or one of the wrong shape.
class InconsistentTranscript : public Error {
public:
    using Error::Error;
};

/// A construction was invoked outside its domain.
class PreconditionError : public Error {
public:
    using Error::Error;
};

}  // namespace ratproof
