#pragma once

#include <stdexcept>
#include <string>

namespace evoconv {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented precondition (grid mismatch, alignment, bounds).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// An iterative estimator hit its iteration cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_estimate, std::size_t iterations)
        : Error(what), last_estimate_(last_estimate), iterations_(iterations) {}

    double last_estimate() const noexcept { return last_estimate_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double last_estimate_;
    std::size_t iterations_;
};

/// A time step produced a (numerically) singular spatial system.
class SingularStepError : public Error {
public:
    SingularStepError(const std::string& what, std::size_t step, double min_pivot)
        : Error(what), step_(step), min_pivot_(min_pivot) {}

    std::size_t step() const noexcept { return step_; }
    double min_pivot() const noexcept { return min_pivot_; }

private:
    std::size_t step_;
    double min_pivot_;
};

}  // namespace evoconv
