#pragma once

#include <stdexcept>
#include <string>

namespace annuity {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

class InvalidIntegrand : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class BracketError : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NonConcave : public Error {
public:
    using Error::Error;
};

class DegenerateMarginalValue : public Error {
public:
    using Error::Error;
};

class NoConvergence : public NumericalFailure {
public:
    NoConvergence(const std::string& what, double last_residual)
        : NumericalFailure(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

// The free boundary was not resolved inside the computational domain.
class GridTooSmall : public Error {
public:
    using Error::Error;
};

}  // namespace annuity
