#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "glocal/common.hpp"

namespace glocal {

/// One network component: dx = A x + L v + B u, y = C x.
struct ComponentModel {
    Matrix A;  // n0 x n0
    Matrix L;  // n0 x q
    Matrix B;  // n0 x 1
    Matrix C;  // 1 x n0

    int state_dim() const { return static_cast<int>(A.rows()); }
    int interaction_dim() const { return static_cast<int>(L.cols()); }
};

/// Second-order component m*theta'' + d*theta' + v + u = 0 with y = omega.
/// State ordering [theta; omega].
ComponentModel second_order_component(double inertia, double damping);

struct WeightedEdge {
    int k = 0;  // 0-based component indices
    int l = 0;
    double weight = 1.0;
};

/// Interaction map v = M x over all components.
struct Interconnection {
    Matrix M;                                  // (N0*q) x (N0*n0)
    std::vector<std::vector<int>> neighbors;   // adjacency, 0-based
    std::vector<WeightedEdge> edges;
};

/// Diffusive coupling v_k = sum_{l in N_k} alpha_{k,l} (theta_k - theta_l).
/// Acts on the angle (first) coordinate of each component.
Interconnection diffusive_coupling(int component_count, const std::vector<WeightedEdge>& edges,
                                   int state_dim = 2);

struct NetworkSystem {
    std::vector<ComponentModel> components;
    Interconnection interconnection;

    int component_count() const { return static_cast<int>(components.size()); }
    int component_dim() const { return components.empty() ? 0 : components.front().state_dim(); }
    int state_dim() const { return component_count() * component_dim(); }

    Matrix block_diag_A() const;
    Matrix block_diag_L() const;
    Matrix block_diag_B() const;
    Matrix block_diag_C() const;

    /// diag(A_k) + diag(L_k) M
    Matrix global_state_matrix() const;
};

/// Disjoint index sets covering {0, ..., N0-1}.
struct ClusterSet {
    std::vector<std::vector<int>> clusters;

    int cluster_count() const { return static_cast<int>(clusters.size()); }
    int ground_size() const;
    /// Throws InvalidParameter unless the clusters partition {0..N0-1}.
    void validate(int N0) const;
    std::vector<int> sizes() const;
};

struct Perturbation {
    double magnitude = 0.0;
    std::uint64_t seed = 0;
};

/// The built-in 9*n0 second-order benchmark on the canonical symmetric
/// topology (complete graph, alpha = 1) with parameter groups
/// (3,0.4)/(2,0.3)/(1,0.2) of sizes 3n0/2n0/4n0.  With `perturb`, m and d of
/// every component are scaled by independent (1+delta), delta uniform on
/// [-magnitude, magnitude].
std::pair<NetworkSystem, ClusterSet> benchmark_network(int n0,
                                                       std::optional<Perturbation> perturb = {});

/// Broadcast matrix P0 = diag(1_{r_i} (x) I_{n0i}) and the cluster embeddings P_i.
struct LiftingMatrices {
    Matrix P0;               // n x (N*n0i)
    std::vector<Matrix> P;   // each n x n_i, orthonormal 0/1 embeddings
};

LiftingMatrices lifting_matrices(const std::vector<int>& cluster_sizes, int component_dim);

/// The clustered interconnected system: components reordered by cluster, the
/// assembled A, lifting matrices, global I/O matrices and per-cluster blocks.
struct ClusteredSystem {
    Matrix A;                 // n x n, cluster-ordered
    Matrix P0;                // n x sum(n0i)
    std::vector<Matrix> P;    // embeddings
    Matrix B0;                // sum(n0i) x N     (P0 B0 = diag(B_i) E0)
    Matrix C0;                // N x sum(n0i)     (C0 P0^T = E0^T diag(C_i))
    Matrix E0;                // sum(r_i) x N, diag(1_{r_i})
    std::vector<Matrix> Ai;   // diag of component A blocks per cluster
    std::vector<Matrix> Li;
    std::vector<Matrix> Bi;
    std::vector<Matrix> Ci;
    std::vector<Matrix> Mi;   // rows of M feeding cluster i (v_i = Mi x)
    Matrix M;                 // cluster-ordered interaction map
    std::vector<int> r;       // components per cluster
    std::vector<int> n0i;     // per-component state dim per cluster
    std::vector<int> permutation;  // cluster-ordered position -> original index
    ClusterSet clusters;           // in cluster-ordered (contiguous) indexing

    int cluster_count() const { return static_cast<int>(r.size()); }
    int state_dim() const { return static_cast<int>(A.rows()); }
    int global_dim() const { return static_cast<int>(P0.cols()); }
    int cluster_state_dim(int i) const { return static_cast<int>(P[i].cols()); }
};

/// Builds the clustered system; checks Assumption 1 (identical B and C inside
/// every cluster) and reports the offending cluster and component pair.
ClusteredSystem clustered_system(const NetworkSystem& net, const ClusterSet& cs);

}  // namespace glocal
