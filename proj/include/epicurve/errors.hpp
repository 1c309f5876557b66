#pragma once

#include <stdexcept>
#include <string>

namespace epicurve {

/// Bad parameters or an ill-formed model description.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The model has no positive Malthusian parameter.
class SubcriticalError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative solver failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// A branching simulation exceeded its population cap.
class PopulationCapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Not enough major outbreaks were observed within the attempt budget.
class InsufficientOutbreaks : public std::runtime_error {
public:
    InsufficientOutbreaks(const std::string& what, long achieved)
        : std::runtime_error(what), achieved_(achieved) {}
    long achieved() const { return achieved_; }

private:
    long achieved_;
};

} // namespace epicurve
