// errors.hpp: Exception hierarchy shared by the library and the CLI

#pragma once

#include <stdexcept>
#include <string>

namespace wqed {

// Base class; `exit_code()` is what the CLI returns when this escapes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

// Invalid input: bad parameters, out-of-range operating points, malformed config.
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

// EJ(flux)/EC dropped below 1; the transmon frequency formula no longer applies.
class RegimeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Target transition frequency above the zero-flux maximum.
class UnreachableFrequencyError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Numerical failure: singular steady state, step-size underflow, fit divergence, ...
class SolverError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class SingularSystemError : public SolverError {
public:
    using SolverError::SolverError;
};

class StepFailureError : public SolverError {
public:
    using SolverError::SolverError;
};

class ConvergenceError : public SolverError {
public:
    using SolverError::SolverError;
};

class ZeroDriveError : public SolverError {
public:
    using SolverError::SolverError;
};

class InsufficientDipsError : public SolverError {
public:
    using SolverError::SolverError;
};

class InconsistencyError : public SolverError {
public:
    using SolverError::SolverError;
};

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

} // namespace wqed
