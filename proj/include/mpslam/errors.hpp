#pragma once

#include <stdexcept>
#include <string>

namespace mpslam {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A covariance could not be factorized or inverted.
class FactorizationError : public Error {
public:
    using Error::Error;
};

/// Vector/matrix dimensions are inconsistent.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Mixture with no positive weight.
class DegenerateMixtureError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// NaN or infinity appeared during an iterative computation.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// All particle weights vanished; the agent track is lost.
class TrackLossError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mpslam
