#pragma once
#include <stdexcept>
#include <string>

namespace lerexp {

/// bad input or precondition; maps to exit code 1
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// mode list too short to certify a result up to the horizon
struct InsufficientModes : ValidationError {
    using ValidationError::ValidationError;
};

/// numerical failure (divergence, ill-conditioning, resonance); exit code 2
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// a structural invariant was broken; exit code 3
struct InvariantViolation : std::logic_error {
    using std::logic_error::logic_error;
};

/// pi_min of a zf set came out non-positive
struct PositivityViolation : InvariantViolation {
    using InvariantViolation::InvariantViolation;
};

}  // namespace lerexp
