#include "glocal/simulation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace glocal {

Trajectory simulate(const Matrix& A, const Matrix& input_map,
                    const std::function<Vector(double)>& u, const Vector& x0, double horizon,
                    double step, std::vector<std::string> labels) {
    if (!(step > 0.0)) throw InvalidParameter("simulate: step must be positive");
    if (horizon < step) throw InvalidParameter("simulate: horizon must be at least one step");
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || x0.size() != n || input_map.rows() != n) {
        throw InvalidParameter("simulate: dimension mismatch");
    }

    const int steps = static_cast<int>(std::llround(horizon / step));
    Trajectory traj;
    traj.times.resize(steps + 1);
    traj.states.resize(steps + 1, n);
    if (labels.empty()) {
        for (int j = 0; j < n; ++j) labels.push_back("x" + std::to_string(j + 1));
    }
    traj.labels = std::move(labels);

    Vector x = x0;
    traj.times[0] = 0.0;
    traj.states.row(0) = x.transpose();
    for (int k = 0; k < steps; ++k) {
        const double t = k * step;
        const Vector f = input_map * u(t);  // held over [t, t+step)
        const Vector k1 = A * x + f;
        const Vector k2 = A * (x + 0.5 * step * k1) + f;
        const Vector k3 = A * (x + 0.5 * step * k2) + f;
        const Vector k4 = A * (x + step * k3) + f;
        x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) {
            throw DivergenceError("simulate: state diverged at t = " + std::to_string(t + step),
                                  t + step);
        }
        traj.times[k + 1] = (k + 1) * step;
        traj.states.row(k + 1) = x.transpose();
    }
    return traj;
}

ComplexVector eigenvalues(const Matrix& A) {
    Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues();
}

double spectral_abscissa(const Matrix& A) {
    if (A.rows() != A.cols()) throw InvalidParameter("spectral_abscissa: matrix must be square");
    return eigenvalues(A).real().maxCoeff();
}

Matrix lyapunov_solve(const Matrix& A, const Matrix& Q) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || Q.rows() != n || Q.cols() != n) {
        throw InvalidParameter("lyapunov_solve: dimension mismatch");
    }

    Eigen::ComplexSchur<Matrix> schur(A, /*computeU=*/true);
    if (schur.info() != Eigen::Success) throw SynthesisError("lyapunov_solve: Schur failed");
    const ComplexMatrix& T = schur.matrixT();
    const ComplexMatrix& U = schur.matrixU();

    const double scale = A.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (std::abs(T(i, i) + std::conj(T(j, j))) <= 1e-12 * std::max(1.0, scale)) {
                throw SynthesisError(
                    "lyapunov_solve: spectrum touches the imaginary axis (lambda_i + "
                    "conj(lambda_j) ~ 0)");
            }
        }
    }

    // T Y + Y T^H + F = 0 column by column, last column first.
    ComplexMatrix F = U.adjoint() * Q * U;
    ComplexMatrix Y = ComplexMatrix::Zero(n, n);
    for (int k = n - 1; k >= 0; --k) {
        ComplexVector rhs = -F.col(k);
        for (int j = k + 1; j < n; ++j) rhs -= std::conj(T(k, j)) * Y.col(j);
        ComplexMatrix Tk = T;
        Tk.diagonal().array() += std::conj(T(k, k));
        Y.col(k) = Tk.triangularView<Eigen::Upper>().solve(rhs);
    }
    Matrix X = (U * Y * U.adjoint()).real();
    return 0.5 * (X + X.transpose());
}

HankelResult hankel_singular_values(const Matrix& A, const Matrix& B, const Matrix& C,
                                    double deflate_tol) {
    const int n = static_cast<int>(A.rows());
    Eigen::EigenSolver<Matrix> es(A);
    if (es.info() != Eigen::Success) throw SynthesisError("hankel: eigendecomposition failed");
    const ComplexVector lam = es.eigenvalues();
    const ComplexMatrix V = es.eigenvectors();

    std::vector<int> deflate;
    for (int i = 0; i < n; ++i) {
        if (lam(i).real() >= -deflate_tol) deflate.push_back(i);
    }
    const int d = static_cast<int>(deflate.size());
    if (d == n) throw SynthesisError("hankel: deflation removed the whole spectrum");

    HankelResult result;
    result.deflated = d;

    Matrix As = A;
    Matrix Bs = B;
    Matrix Cs = C;
    if (d > 0) {
        // spectral projector onto the deflated modes (real: the set is closed
        // under conjugation)
        ComplexMatrix Vd(n, d);
        for (int j = 0; j < d; ++j) Vd.col(j) = V.col(deflate[j]);
        ComplexMatrix W = V.inverse();
        ComplexMatrix Wd(d, n);
        for (int j = 0; j < d; ++j) Wd.row(j) = W.row(deflate[j]);
        Matrix Pd = (Vd * Wd).real();
        result.deflated_modes = Vd.real();

        Matrix complement = Matrix::Identity(n, n) - Pd;
        Eigen::JacobiSVD<Matrix> svd(complement, Eigen::ComputeThinU);
        Matrix Z = svd.matrixU().leftCols(n - d);  // oblique projector: sigma >= 1 or 0
        As = Z.transpose() * A * Z;
        Bs = Z.transpose() * (complement * B);
        Cs = C * Z;
    }

    Matrix Wc = lyapunov_solve(As, Bs * Bs.transpose());
    Matrix Wo = lyapunov_solve(As.transpose(), Cs.transpose() * Cs);
    Eigen::EigenSolver<Matrix> prod(Wc * Wo, /*computeEigenvectors=*/false);
    Vector sq = prod.eigenvalues().real().cwiseMax(0.0);
    std::sort(sq.data(), sq.data() + sq.size(), std::greater<double>());
    result.values = sq.array().sqrt();
    return result;
}

void write_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << "t";
    for (const auto& label : traj.labels) out << "," << label;
    out << "\n";
    char buf[64];
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", traj.times[k]);
        out << buf;
        for (int j = 0; j < traj.states.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", traj.states(static_cast<int>(k), j));
            out << "," << buf;
        }
        out << "\n";
    }
}

}  // namespace glocal
