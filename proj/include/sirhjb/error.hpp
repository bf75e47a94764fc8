#pragma once

#include <stdexcept>
#include <string>

namespace sirhjb {

/// Input outside the domain of an operation (negative time, point outside a grid box, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An integration loop hit its horizon cap before its stopping condition held.
class NonTerminationError : public std::runtime_error {
public:
    NonTerminationError(const std::string& what, double reached)
        : std::runtime_error(what), reached_(reached) {}
    double reached() const noexcept { return reached_; }

private:
    double reached_;
};

/// Requested step violates a stability bound; carries the step that would be accepted.
class StepSizeError : public std::invalid_argument {
public:
    StepSizeError(const std::string& what, double suggested)
        : std::invalid_argument(what), suggested_(suggested) {}
    double suggested() const noexcept { return suggested_; }

private:
    double suggested_;
};

/// Value iteration did not reach its tolerance within the iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation requires the other storage form of a value grid.
class FormError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed experiment configuration; the message carries the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sirhjb
