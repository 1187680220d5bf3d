#pragma once

#include <stdexcept>
#include <string>

namespace invchan {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A delay function was evaluated outside of its domain.
class DomainError : public Error {
public:
    using Error::Error;
};

class NotStrictlyCausal : public Error {
public:
    using Error::Error;
};

class NonMonotoneWaveform : public Error {
public:
    using Error::Error;
};

class ThresholdOutOfRange : public Error {
public:
    using Error::Error;
};

class InvalidPulse : public Error {
public:
    using Error::Error;
};

class InvalidSignal : public Error {
public:
    using Error::Error;
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

/// An operation that needs the involution property got a baseline channel.
class NonInvolutionModel : public Error {
public:
    using Error::Error;
};

class AsymmetricChannel : public Error {
public:
    using Error::Error;
};

class NotForward : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

/// Structural problems with a circuit (carries the rendered diagnostics).
class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// A runtime invariant of the execution construction was violated.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

namespace detail {

inline void ensure(bool cond, const char* what)
{
    if (!cond) {
        throw InvariantViolation(what);
    }
}

} // namespace detail
} // namespace invchan
