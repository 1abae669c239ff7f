#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace glocal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Bad user-supplied value (nonpositive inertia, empty cluster, ...).
struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Self-loops, asymmetric weights, malformed edge lists.
struct InvalidTopology : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A construction whose defining identities could not be met.
struct ExistenceViolation : std::runtime_error {
    explicit ExistenceViolation(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

/// Controller/observer synthesis failure (unstabilizable pair etc.).
struct SynthesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical blowup during time integration.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
    double time;
};

}  // namespace glocal
