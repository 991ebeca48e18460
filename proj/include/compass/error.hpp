#pragma once

#include <stdexcept>
#include <string>

namespace compass {

/// Malformed or inconsistent input: bad config, mismatched seeds, parse errors.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Multi-way contraction could not be carried out within the configured caps.
class EstimationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A brute-force oracle refused to run because its size guard was exceeded.
class GuardExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace compass
