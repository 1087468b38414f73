#pragma once

#include <stdexcept>
#include <string>

namespace platevem {

/// Base class of every library failure that is not a plain bad argument.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class GenerationFailed : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ElementKernelError : public Error {
public:
    ElementKernelError(const std::string& what, int cell = -1)
        : Error(cell >= 0 ? "cell " + std::to_string(cell) + ": " + what : what), cell_(cell) {}
    int cell() const { return cell_; }

private:
    int cell_;
};

class ConfigurationError : public Error {
public:
    using Error::Error;
};

class DataIncompatibilityError : public Error {
public:
    using Error::Error;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

/// Newton failed to converge (or a linear solve failed) inside a time step.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, int step, double residual_norm)
        : Error("step " + std::to_string(step) + ": " + what), step_(step),
          residual_norm_(residual_norm) {}
    int step() const { return step_; }
    double residual_norm() const { return residual_norm_; }

private:
    int step_;
    double residual_norm_;
};

}  // namespace platevem
