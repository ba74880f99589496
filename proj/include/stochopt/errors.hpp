#pragma once

#include <stdexcept>
#include <string>

namespace stochopt {

/// Thrown when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative linear solve fails to reach its tolerance.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when every cell of the design sits on a phase bound, so the
/// mass multiplier has a vanishing denominator.
class DegenerateDesign : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace stochopt
