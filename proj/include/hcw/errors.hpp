#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hcw {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a mathematical operation
/// (time outside [0,T], k outside (0,1), ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: grid resolution, CFL violation, bad parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Profiles, traces or fields defined on incompatible grids.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite values appeared while time stepping.
class InstabilityError : public Error {
public:
    InstabilityError(const std::string& what, int step) : Error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

/// An iterative solver did not reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace hcw
