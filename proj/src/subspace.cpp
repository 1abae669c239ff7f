#include "glocal/subspace.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace glocal {

OrthonormalBasis orthonormal_basis(const Matrix& M, double tol) {
    OrthonormalBasis basis;
    basis.tol = tol;
    if (M.cols() == 0 || M.norm() == 0.0) {
        basis.Q = Matrix::Zero(M.rows(), 0);
        return basis;
    }
    // JacobiSVD: BDCSVD mis-associates singular vectors on the exactly
    // degenerate spectra these symmetric networks produce
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    int rank = 0;
    while (rank < s.size() && s(rank) > tol * s(0)) ++rank;
    basis.Q = svd.matrixU().leftCols(rank);
    basis.dim = rank;
    return basis;
}

OrthonormalBasis controllable_subspace(const Matrix& A, const Matrix& B, double tol) {
    if (A.rows() != A.cols() || A.cols() != B.rows()) {
        throw InvalidParameter("controllable_subspace: dimension mismatch");
    }
    const int n = static_cast<int>(A.rows());

    OrthonormalBasis seed = orthonormal_basis(B, tol);
    Matrix Q = seed.Q;
    Matrix fresh = Q;

    for (int it = 0; it < n && Q.cols() < n && fresh.cols() > 0; ++it) {
        Matrix V = A * fresh;
        const double scale = V.norm();
        if (scale == 0.0) break;
        // twice-is-enough reorthogonalization against the accumulated basis
        V -= Q * (Q.transpose() * V);
        V -= Q * (Q.transpose() * V);

        Eigen::JacobiSVD<Matrix> svd(V, Eigen::ComputeThinU);
        const auto& s = svd.singularValues();
        int rank = 0;
        while (rank < s.size() && s(rank) > tol * scale) ++rank;
        if (rank == 0) break;
        fresh = svd.matrixU().leftCols(rank);
        Matrix next(n, Q.cols() + rank);
        next << Q, fresh;
        Q = std::move(next);
    }

    OrthonormalBasis basis;
    basis.Q = std::move(Q);
    basis.dim = static_cast<int>(basis.Q.cols());
    basis.tol = tol;
    return basis;
}

double subspace_defect(const OrthonormalBasis& U, const OrthonormalBasis& V) {
    if (U.Q.rows() != V.Q.rows()) throw InvalidParameter("subspace_defect: ambient mismatch");
    if (U.dim == 0) return 0.0;
    Matrix D = U.Q - V.Q * (V.Q.transpose() * U.Q);
    double worst = 0.0;
    for (int j = 0; j < D.cols(); ++j) worst = std::max(worst, D.col(j).norm());
    return worst;
}

bool subspace_leq(const OrthonormalBasis& U, const OrthonormalBasis& V, double tol) {
    return subspace_defect(U, V) <= tol;
}

namespace {

ExistenceReport check_conditions(const Matrix& A, const std::vector<Matrix>& P, const Matrix& P0,
                                 double tol) {
    ExistenceReport report;
    const int N = static_cast<int>(P.size());
    report.local.resize(N);
    report.reachable.resize(N);
    report.single_cluster = (N < 2);

    for (int i = 0; i < N; ++i) {
        auto reach = controllable_subspace(A, P[i], kRankTol);
        Matrix span(A.rows(), P[i].cols() + P0.cols());
        span << P[i], P0;
        auto target = orthonormal_basis(span, kRankTol);
        report.local[i].residual = subspace_defect(reach, target);
        report.local[i].holds = report.local[i].residual <= tol;
        if (!report.local[i].holds && report.first_offending < 0) report.first_offending = i;
    }

    auto reach0 = controllable_subspace(A, P0, kRankTol);
    auto im0 = orthonormal_basis(P0, kRankTol);
    report.global.residual = subspace_defect(reach0, im0);
    report.global.holds = report.global.residual <= tol;

    for (int i = 0; i < N; ++i) {
        if (report.single_cluster) {
            report.reachable[i] = {false, 0.0};
            continue;
        }
        int cols = 0;
        for (int j = 0; j < N; ++j) {
            if (j != i) cols += static_cast<int>(P[j].cols());
        }
        Matrix others(A.rows(), cols);
        int off = 0;
        for (int j = 0; j < N; ++j) {
            if (j == i) continue;
            others.middleCols(off, P[j].cols()) = P[j];
            off += static_cast<int>(P[j].cols());
        }
        auto reach_others = controllable_subspace(A, others, kRankTol);
        auto sync = orthonormal_basis(P[i] * (P[i].transpose() * P0), kRankTol);
        report.reachable[i].residual = subspace_defect(sync, reach_others);
        report.reachable[i].holds = report.reachable[i].residual <= tol;
    }

    report.overall = report.global.holds;
    for (const auto& c : report.local) report.overall = report.overall && c.holds;
    return report;
}

}  // namespace

ExistenceReport existence_check(const ClusteredSystem& cs, double tol) {
    return check_conditions(cs.A, cs.P, cs.P0, tol);
}

ExistenceReport existence_check(const Matrix& A, const ClusterSet& cs, int component_dim,
                                double tol) {
    const int N0 = static_cast<int>(A.rows()) / component_dim;
    cs.validate(N0);
    // Permute A into cluster order so the canonical lifting applies.
    std::vector<int> perm;
    for (const auto& c : cs.clusters) perm.insert(perm.end(), c.begin(), c.end());
    Matrix T = Matrix::Zero(A.rows(), A.rows());
    for (int p = 0; p < N0; ++p) {
        T.block(component_dim * p, component_dim * perm[p], component_dim, component_dim) =
            Matrix::Identity(component_dim, component_dim);
    }
    Matrix Ac = T * A * T.transpose();
    auto lm = lifting_matrices(cs.sizes(), component_dim);
    return check_conditions(Ac, lm.P, lm.P0, tol);
}

bool reachability_condition(const ClusteredSystem& cs, int i, double tol) {
    if (i < 0 || i >= cs.cluster_count()) throw InvalidParameter("reachability_condition: bad index");
    auto report = existence_check(cs, tol);
    return !report.single_cluster && report.reachable[i].holds;
}

}  // namespace glocal
