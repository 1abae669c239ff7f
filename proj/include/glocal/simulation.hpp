#pragma once

#include <functional>
#include <string>
#include <vector>

#include "glocal/common.hpp"

namespace glocal {

struct Trajectory {
    std::vector<double> times;
    Matrix states;  // one row per time, one column per state
    std::vector<std::string> labels;
};

/// Classical fixed-step RK4 for dx = A x + input_map * u(t); u is sampled at
/// the grid points and held constant over each step.  Throws DivergenceError
/// (with the offending time) when the state stops being finite.
Trajectory simulate(const Matrix& A, const Matrix& input_map,
                    const std::function<Vector(double)>& u, const Vector& x0, double horizon,
                    double step, std::vector<std::string> labels = {});

/// Max real part over the eigenvalues of A.
double spectral_abscissa(const Matrix& A);

ComplexVector eigenvalues(const Matrix& A);

/// Solves A X + X A^T + Q = 0 via complex Schur back-substitution.
/// Throws SynthesisError when eigenvalues pair across the imaginary axis.
Matrix lyapunov_solve(const Matrix& A, const Matrix& Q);

struct HankelResult {
    Vector values;      // descending
    int deflated = 0;   // modes removed with Re(lambda) >= -deflate_tol
    Matrix deflated_modes;  // columns: real parts of the removed eigenvectors
};

/// Hankel singular values of (A,B,C) after deflating the (near-)semistable
/// invariant subspace: eigenvalues with Re >= -deflate_tol are removed through
/// the spectral projector; gramians of the stable restriction are solved by
/// lyapunov_solve.
HankelResult hankel_singular_values(const Matrix& A, const Matrix& B, const Matrix& C,
                                    double deflate_tol = 1e-6);

/// CSV with a header row of labels and full-precision (17 significant digits)
/// values, one row per time step.
void write_csv(const Trajectory& traj, const std::string& path);

}  // namespace glocal
