#include "glocal/network.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace glocal {

ComponentModel second_order_component(double inertia, double damping) {
    if (!(inertia > 0.0)) {
        throw InvalidParameter("second_order_component: inertia must be positive, got " +
                               std::to_string(inertia));
    }
    if (damping < 0.0) {
        throw InvalidParameter("second_order_component: damping must be nonnegative, got " +
                               std::to_string(damping));
    }
    ComponentModel c;
    c.A = Matrix{{0.0, 1.0}, {0.0, -damping / inertia}};
    c.L = Matrix{{0.0}, {-1.0 / inertia}};
    c.B = Matrix{{0.0}, {-1.0 / inertia}};
    c.C = Matrix{{0.0, 1.0}};
    return c;
}

Interconnection diffusive_coupling(int component_count, const std::vector<WeightedEdge>& edges,
                                   int state_dim) {
    if (component_count < 1) throw InvalidParameter("diffusive_coupling: need at least one component");
    std::map<std::pair<int, int>, double> weight;
    for (const auto& e : edges) {
        if (e.k < 0 || e.k >= component_count || e.l < 0 || e.l >= component_count) {
            throw InvalidTopology("diffusive_coupling: edge index out of range");
        }
        if (e.k == e.l) throw InvalidTopology("diffusive_coupling: self-loop on component " +
                                              std::to_string(e.k + 1));
        if (!(e.weight > 0.0)) throw InvalidTopology("diffusive_coupling: nonpositive weight");
        auto key = std::minmax(e.k, e.l);
        auto [it, inserted] = weight.emplace(key, e.weight);
        if (!inserted && it->second != e.weight) {
            throw InvalidTopology("diffusive_coupling: asymmetric weight on edge (" +
                                  std::to_string(e.k + 1) + "," + std::to_string(e.l + 1) + ")");
        }
    }

    Interconnection ic;
    ic.M = Matrix::Zero(component_count, component_count * state_dim);
    ic.neighbors.assign(component_count, {});
    for (const auto& [key, w] : weight) {
        auto [k, l] = key;
        ic.M(k, state_dim * k) += w;
        ic.M(k, state_dim * l) -= w;
        ic.M(l, state_dim * l) += w;
        ic.M(l, state_dim * k) -= w;
        ic.neighbors[k].push_back(l);
        ic.neighbors[l].push_back(k);
        ic.edges.push_back({k, l, w});
    }
    for (auto& nb : ic.neighbors) std::sort(nb.begin(), nb.end());
    return ic;
}

Matrix NetworkSystem::block_diag_A() const {
    const int n0 = component_dim();
    Matrix A = Matrix::Zero(state_dim(), state_dim());
    for (int k = 0; k < component_count(); ++k) A.block(n0 * k, n0 * k, n0, n0) = components[k].A;
    return A;
}

Matrix NetworkSystem::block_diag_L() const {
    const int n0 = component_dim();
    const int q = components.empty() ? 0 : components.front().interaction_dim();
    Matrix L = Matrix::Zero(state_dim(), component_count() * q);
    for (int k = 0; k < component_count(); ++k) L.block(n0 * k, q * k, n0, q) = components[k].L;
    return L;
}

Matrix NetworkSystem::block_diag_B() const {
    const int n0 = component_dim();
    Matrix B = Matrix::Zero(state_dim(), component_count());
    for (int k = 0; k < component_count(); ++k) B.block(n0 * k, k, n0, 1) = components[k].B;
    return B;
}

Matrix NetworkSystem::block_diag_C() const {
    const int n0 = component_dim();
    Matrix C = Matrix::Zero(component_count(), state_dim());
    for (int k = 0; k < component_count(); ++k) C.block(k, n0 * k, 1, n0) = components[k].C;
    return C;
}

Matrix NetworkSystem::global_state_matrix() const {
    return block_diag_A() + block_diag_L() * interconnection.M;
}

int ClusterSet::ground_size() const {
    int total = 0;
    for (const auto& c : clusters) total += static_cast<int>(c.size());
    return total;
}

void ClusterSet::validate(int N0) const {
    std::vector<char> seen(N0, 0);
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        if (clusters[i].empty()) {
            throw InvalidParameter("cluster " + std::to_string(i + 1) + " is empty");
        }
        for (int k : clusters[i]) {
            if (k < 0 || k >= N0) {
                throw InvalidParameter("cluster " + std::to_string(i + 1) +
                                       " references component " + std::to_string(k + 1) +
                                       " outside 1.." + std::to_string(N0));
            }
            if (seen[k]) {
                throw InvalidParameter("component " + std::to_string(k + 1) +
                                       " appears in two clusters");
            }
            seen[k] = 1;
        }
    }
    for (int k = 0; k < N0; ++k) {
        if (!seen[k]) {
            throw InvalidParameter("component " + std::to_string(k + 1) + " is not covered");
        }
    }
}

std::vector<int> ClusterSet::sizes() const {
    std::vector<int> s;
    s.reserve(clusters.size());
    for (const auto& c : clusters) s.push_back(static_cast<int>(c.size()));
    return s;
}

std::pair<NetworkSystem, ClusterSet> benchmark_network(int n0, std::optional<Perturbation> perturb) {
    if (n0 < 1) throw InvalidParameter("benchmark_network: n0 must be >= 1");
    const int N0 = 9 * n0;

    struct Group {
        int size;
        double m, d;
    };
    const Group groups[3] = {{3 * n0, 3.0, 0.4}, {2 * n0, 2.0, 0.3}, {4 * n0, 1.0, 0.2}};

    std::mt19937_64 rng(perturb ? perturb->seed : 0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    NetworkSystem net;
    net.components.reserve(N0);
    for (const auto& g : groups) {
        for (int j = 0; j < g.size; ++j) {
            double m = g.m;
            double d = g.d;
            if (perturb && perturb->magnitude > 0.0) {
                m *= 1.0 + perturb->magnitude * unif(rng);
                d *= 1.0 + perturb->magnitude * unif(rng);
            }
            ComponentModel c = second_order_component(m, d);
            // The perturbation models plant (inertia/damping) uncertainty; the
            // actuation and measurement interface stays at the group nominal so
            // the broadcast structure of the cluster inputs remains exact.
            c.B = Matrix{{0.0}, {-1.0 / g.m}};
            net.components.push_back(std::move(c));
        }
    }

    // canonical symmetric topology: complete graph, alpha = 1
    std::vector<WeightedEdge> edges;
    edges.reserve(N0 * (N0 - 1) / 2);
    for (int k = 0; k < N0; ++k) {
        for (int l = k + 1; l < N0; ++l) edges.push_back({k, l, 1.0});
    }
    net.interconnection = diffusive_coupling(N0, edges, 2);

    ClusterSet cs;
    int next = 0;
    for (const auto& g : groups) {
        std::vector<int> idx(g.size);
        std::iota(idx.begin(), idx.end(), next);
        next += g.size;
        cs.clusters.push_back(std::move(idx));
    }
    return {std::move(net), std::move(cs)};
}

LiftingMatrices lifting_matrices(const std::vector<int>& cluster_sizes, int component_dim) {
    const int N = static_cast<int>(cluster_sizes.size());
    const int n0 = component_dim;
    int n = 0;
    for (int r : cluster_sizes) n += n0 * r;

    LiftingMatrices lm;
    lm.P0 = Matrix::Zero(n, n0 * N);
    lm.P.reserve(N);
    int off = 0;
    for (int i = 0; i < N; ++i) {
        const int ni = n0 * cluster_sizes[i];
        Matrix Pi = Matrix::Zero(n, ni);
        Pi.block(off, 0, ni, ni) = Matrix::Identity(ni, ni);
        lm.P.push_back(std::move(Pi));
        for (int j = 0; j < cluster_sizes[i]; ++j) {
            lm.P0.block(off + n0 * j, n0 * i, n0, n0) = Matrix::Identity(n0, n0);
        }
        off += ni;
    }
    return lm;
}

ClusteredSystem clustered_system(const NetworkSystem& net, const ClusterSet& cs) {
    const int N0 = net.component_count();
    cs.validate(N0);
    const int n0 = net.component_dim();
    const int q = net.components.front().interaction_dim();
    const int N = cs.cluster_count();

    // Assumption 1: identical B and C inside every cluster.
    for (int i = 0; i < N; ++i) {
        const auto& idx = cs.clusters[i];
        for (std::size_t j = 1; j < idx.size(); ++j) {
            const auto& a = net.components[idx[0]];
            const auto& b = net.components[idx[j]];
            if ((a.B - b.B).norm() > 0.0 || (a.C - b.C).norm() > 0.0) {
                std::ostringstream msg;
                msg << "clustered_system: Assumption 1 violated in cluster " << (i + 1)
                    << ": components " << (idx[0] + 1) << " and " << (idx[j] + 1)
                    << " have different input/output matrices";
                throw InvalidParameter(msg.str());
            }
        }
    }

    ClusteredSystem sys;
    sys.r = cs.sizes();
    sys.n0i.assign(N, n0);

    // cluster-ordered permutation: position -> original component index
    for (const auto& c : cs.clusters) sys.permutation.insert(sys.permutation.end(), c.begin(), c.end());
    int pos = 0;
    for (int i = 0; i < N; ++i) {
        std::vector<int> contiguous(sys.r[i]);
        std::iota(contiguous.begin(), contiguous.end(), pos);
        pos += sys.r[i];
        sys.clusters.clusters.push_back(std::move(contiguous));
    }

    const int n = N0 * n0;
    Matrix T = Matrix::Zero(n, n);   // state reorder: x_ordered = T x_original
    Matrix Tq = Matrix::Zero(N0, N0);  // interaction-row reorder
    for (int p = 0; p < N0; ++p) {
        const int orig = sys.permutation[p];
        T.block(n0 * p, n0 * orig, n0, n0) = Matrix::Identity(n0, n0);
        Tq(p, orig) = 1.0;
    }

    Matrix Ad = Matrix::Zero(n, n), Ld = Matrix::Zero(n, N0 * q), Bd = Matrix::Zero(n, N0),
           Cd = Matrix::Zero(N0, n);
    for (int p = 0; p < N0; ++p) {
        const auto& c = net.components[sys.permutation[p]];
        Ad.block(n0 * p, n0 * p, n0, n0) = c.A;
        Ld.block(n0 * p, q * p, n0, q) = c.L;
        Bd.block(n0 * p, p, n0, 1) = c.B;
        Cd.block(p, n0 * p, 1, n0) = c.C;
    }
    sys.M = Tq * net.interconnection.M * T.transpose();
    sys.A = Ad + Ld * sys.M;

    auto lm = lifting_matrices(sys.r, n0);
    sys.P0 = std::move(lm.P0);
    sys.P = std::move(lm.P);

    int rows = 0;
    sys.E0 = Matrix::Zero(N0, N);
    for (int i = 0; i < N; ++i) {
        sys.E0.block(rows, i, sys.r[i], 1).setOnes();
        rows += sys.r[i];
    }

    // P0 B0 = diag(B_i) E0 and C0 P0^T = E0^T diag(C_i); both are exactly
    // solvable under Assumption 1 (P0 has full column rank).
    const Matrix P0tP0_inv = (sys.P0.transpose() * sys.P0).inverse();
    sys.B0 = P0tP0_inv * sys.P0.transpose() * (Bd * sys.E0);
    sys.C0 = (sys.E0.transpose() * Cd) * sys.P0 * P0tP0_inv;

    int off = 0;
    rows = 0;
    for (int i = 0; i < N; ++i) {
        const int ni = n0 * sys.r[i];
        sys.Ai.push_back(Ad.block(off, off, ni, ni));
        sys.Li.push_back(Ld.block(off, q * rows, ni, q * sys.r[i]));
        sys.Bi.push_back(Bd.block(off, rows, ni, sys.r[i]));
        sys.Ci.push_back(Cd.block(rows, off, sys.r[i], ni));
        sys.Mi.push_back(sys.M.block(q * rows, 0, q * sys.r[i], n));
        off += ni;
        rows += sys.r[i];
    }
    return sys;
}

}  // namespace glocal
