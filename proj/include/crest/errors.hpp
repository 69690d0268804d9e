#pragma once

#include <stdexcept>
#include <string>

namespace crest {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad call: dimension mismatch, weight matrix not SPD, parameter out of range.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Model sequence is structurally inconsistent (dimensions change across steps).
class StructuralError : public Error {
public:
    using Error::Error;
};

// A matrix that must be invertible for the estimator to exist is numerically
// singular (e.g. the attack-observability product lost rank).
class SingularityError : public Error {
public:
    using Error::Error;
};

// The constraint polyhedron is empty.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// Active-set iteration cap exceeded; constraint geometry is degenerate.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// A computed quantity violated a numerical consistency bound, e.g. a
// covariance came out with a significantly negative eigenvalue.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Configuration or input-file problem (maps to CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace crest
