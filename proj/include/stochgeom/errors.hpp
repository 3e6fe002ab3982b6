#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stochgeom {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative numerical procedure failed to converge.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cholesky factorisation failed even after jitter escalation.
class NotPositiveDefiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; the message names the offending location.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation requested outside the supported configuration (e.g. q != 2).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the process-wide warning sink and returns the previous one.
/// The default handler writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace stochgeom
