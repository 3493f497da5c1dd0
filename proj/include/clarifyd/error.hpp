// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The clarifyd Authors

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clarifyd {

/// Base class for every recoverable failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (bad K, out-of-range rank, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input text could not be parsed. `line()` is 1-based; 0 when not line-oriented.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace clarifyd
