#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sloppy_baker {

/// Raised when an argument violates a documented precondition (shape,
/// parity, alignment, Hermiticity...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by iterative routines that exhaust their iteration budget.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (best residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// A numerical invariant (positivity, normalization) failed on computed data.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw PreconditionError(message);
}

inline bool is_integer_value(double x, double tol = 1e-9) { return std::abs(x - std::round(x)) <= tol; }

} // namespace detail
} // namespace sloppy_baker
