#pragma once

#include <stdexcept>
#include <string>

namespace ompath {

/// Input outside an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Bad configuration or argument shape.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures of an otherwise valid numerical computation.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The diffusion coefficient g1 vanished, so the metric 1/g1^2 is undefined.
class MetricSingularity : public NumericalError {
public:
    MetricSingularity(const std::string& what, double time = 0.0)
        : NumericalError(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// A trajectory left every reasonable bound.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, double escape_time)
        : NumericalError(what), escape_time_(escape_time) {}
    double escape_time() const noexcept { return escape_time_; }

private:
    double escape_time_;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace ompath
