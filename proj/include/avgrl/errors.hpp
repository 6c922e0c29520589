#pragma once

#include <stdexcept>
#include <string>

namespace avgrl {

/// Malformed input: bad shapes, bad file contents, inconsistent lengths.
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input is well-formed but outside the mathematical domain of the
/// operation (reducible chain, parameter out of range, empty policy set).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An algorithmic precondition check failed (names the offending object).
struct PreconditionError : DomainError {
    using DomainError::DomainError;
};

/// Iterative method exhausted its budget; carries the last residual.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), last_residual(residual) {}
    double last_residual;
};

/// Non-finite value produced mid-computation; carries the step index.
struct NumericalError : std::runtime_error {
    NumericalError(const std::string& what, long step)
        : std::runtime_error(what), at_step(step) {}
    long at_step;
};

}  // namespace avgrl
