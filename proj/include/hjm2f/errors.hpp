// SPDX-License-Identifier: Apache-2.0
/**
 * @file errors.hpp
 * @brief Exception hierarchy shared by all hjm2f modules
 */

#pragma once

#include <stdexcept>
#include <string>

namespace hjm2f {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation
/// (unordered maturities, non-positive rate, non-positive curve value, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Value outside the range of an invertible map; callers translate this into
/// an OutOfRange estimate rather than propagating it.
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

/// A ratio statistic whose denominator vanishes (identical or constant paths).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// The 2x2 volatility inversion is numerically singular at some time.
class IllConditionedError : public Error {
public:
    using Error::Error;
};

/// Generic numerical failure (non-finite plug-in variance, etc.).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a data invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace hjm2f
