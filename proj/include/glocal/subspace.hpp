#pragma once

#include <optional>
#include <vector>

#include "glocal/common.hpp"
#include "glocal/network.hpp"

namespace glocal {

inline constexpr double kRankTol = 1e-9;       // relative singular-value cutoff
inline constexpr double kInclusionTol = 1e-8;  // subspace inclusion defect

struct OrthonormalBasis {
    Matrix Q;       // orthonormal columns
    int dim = 0;    // == Q.cols()
    double tol = kRankTol;
};

/// Orthonormal basis of the column space of M (SVD truncation at tol * sigma_max).
OrthonormalBasis orthonormal_basis(const Matrix& M, double tol = kRankTol);

/// Controllable subspace R(A,B) = span[B, AB, ..., A^{n-1}B] by incremental
/// block-Krylov orthogonalization; each new block is reorthogonalized twice
/// and truncated at tol relative to the block's pre-orthogonalization scale.
OrthonormalBasis controllable_subspace(const Matrix& A, const Matrix& B, double tol = kRankTol);

/// max over columns u of U of ||(I - V V^T) u||.
double subspace_defect(const OrthonormalBasis& U, const OrthonormalBasis& V);

bool subspace_leq(const OrthonormalBasis& U, const OrthonormalBasis& V,
                  double tol = kInclusionTol);

struct ExistenceReport {
    struct Condition {
        bool holds = false;
        double residual = 0.0;  // worst column defect (sine of offending angle)
    };
    std::vector<Condition> local;      // condition on R(A,P_i) per cluster
    Condition global;                  // condition on R(A,P_0)
    std::vector<Condition> reachable;  // per-cluster reachability-from-others
    bool single_cluster = false;       // reachability not meaningful when N == 1
    bool overall = false;              // AND of local flags and the global flag
    /// 0-based index of the first cluster whose local condition fails, or -1.
    int first_offending = -1;
};

/// Evaluates R(A,P_i) <= im P_i + im P_0 for every cluster, R(A,P_0) <= im P_0,
/// and the per-cluster reachability condition.
ExistenceReport existence_check(const ClusteredSystem& cs, double tol = kInclusionTol);

/// Variant used by the clustering algorithms: needs only A and the partition
/// (no input/output data, so Assumption 1 is not required here).
ExistenceReport existence_check(const Matrix& A, const ClusterSet& cs, int component_dim,
                                double tol = kInclusionTol);

/// im P_i P_i^T P_0 <= R(A, [P_1 ... P_{i-1} P_{i+1} ... P_N]); false with the
/// single_cluster flag set when there are no other clusters.
bool reachability_condition(const ClusteredSystem& cs, int i, double tol = kInclusionTol);

}  // namespace glocal
