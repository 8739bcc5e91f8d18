#pragma once

#include <stdexcept>
#include <string>

namespace molqca {

/// A density operator or Bloch vector that is not a physical state.
class InvalidStateError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An argument outside the domain of an operation (time out of range, zero sweep, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Adaptive step size collapsed below the configured floor.
class StiffnessError : public std::runtime_error {
public:
    StiffnessError(const std::string& what, double time, double step)
        : std::runtime_error(what), time_(time), step_(step) {}

    double time() const noexcept { return time_; }
    double step() const noexcept { return step_; }

private:
    double time_;
    double step_;
};

} // namespace molqca
