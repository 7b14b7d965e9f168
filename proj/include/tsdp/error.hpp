#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsdp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Extents of the operands do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument value outside the operation's domain (empty input, NaN, bad index).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An operation requiring an orthogonal transform was handed a non-orthogonal one.
class NotOrthogonal : public Error {
public:
    using Error::Error;
};

/// Input violates a structural precondition (asymmetric, not PSD, wrong slice pattern).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed to produce a usable answer.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents. Carries the 1-based line (text formats) or byte offset (binary).
class ParseError : public Error {
public:
    ParseError(std::string const& what, std::size_t location)
        : Error(what), location_(location) {}

    std::size_t location() const noexcept { return location_; }

private:
    std::size_t location_;
};

} // namespace tsdp
