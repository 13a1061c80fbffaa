#pragma once

#include <stdexcept>
#include <string>

namespace lassodof {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad dimensions, non-finite entries, invalid parameters.
class InputError : public Error {
public:
    using Error::Error;
};

/// An iterative method ran out of budget before reaching its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, long iterations, double primal_residual, double dual_residual)
        : Error(what), iterations_(iterations), primal_(primal_residual), dual_(dual_residual)
    {}

    long iterations() const { return iterations_; }
    double primal_residual() const { return primal_; }
    double dual_residual() const { return dual_; }

private:
    long iterations_;
    double primal_;
    double dual_;
};

/// An exact identity failed numerically; solver accuracy or set detection is off.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

} // namespace lassodof
