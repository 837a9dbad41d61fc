#pragma once

#include <stdexcept>
#include <string>

namespace tratopo {

/// Malformed input file (bad row, wrong field count). Carries a 1-based line
/// number when the source is a text file.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Structurally valid input that violates a schema constraint
/// (inconsistent feature width, label out of range, ...).
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument to an operation (bad ratios, out-of-range node, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite intermediate, diverged training, violated stochastic invariant.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tratopo
