#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlnens {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Newton iteration did not reach the requested residual.
class NonConvergence : public Error {
public:
    NonConvergence(int iterations, double residual)
        : Error("nonlinear solve did not converge after " + std::to_string(iterations) +
                " iterations (residual " + std::to_string(residual) + ")"),
          iterations_(iterations),
          residual_(residual)
    {
    }

    int iterations() const { return iterations_; }
    double residual() const { return residual_; }

private:
    int iterations_;
    double residual_;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

/// Non-finite values appeared in a solution; the run cannot continue.
class InstabilityError : public Error {
public:
    InstabilityError(std::size_t step, double time)
        : Error("non-finite solution at step " + std::to_string(step) + ", t = " + std::to_string(time)),
          step_(step),
          time_(time)
    {
    }

    std::size_t step() const { return step_; }
    double time() const { return time_; }

private:
    std::size_t step_;
    double time_;
};

}  // namespace dlnens
