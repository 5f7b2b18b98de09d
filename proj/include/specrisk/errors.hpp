#pragma once

#include <stdexcept>
#include <string>

namespace specrisk {

/// Bad user input: malformed config, invalid parameters, unparsable expressions.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Expression lexing/parsing failure; carries the offset into the source string.
class parse_error : public config_error {
public:
    parse_error(const std::string& msg, std::size_t position)
        : config_error(msg + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// A solver's mathematical hypotheses do not hold for the given instance
/// (incompatible payout, monotonicity/partition mismatch, ...).
class hypothesis_error : public std::runtime_error {
public:
    explicit hypothesis_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: quadrature non-convergence, LP breakdown, non-finite values.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace specrisk
