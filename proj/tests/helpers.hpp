#pragma once

#include <Eigen/SVD>

#include <random>
#include <vector>

#include "glocal/network.hpp"
#include "glocal/subspace.hpp"

namespace glocal::test {

struct BenchmarkFixture {
    NetworkSystem net;
    ClusterSet clusters;
    ClusteredSystem sys;
};

inline BenchmarkFixture make_benchmark(int n0, double perturb = 0.0, std::uint64_t seed = 1) {
    std::optional<Perturbation> p;
    if (perturb > 0.0) p = Perturbation{perturb, seed};
    auto [net, cs] = benchmark_network(n0, p);
    auto sys = clustered_system(net, cs);
    return {std::move(net), std::move(cs), std::move(sys)};
}

/// Brute-force oracle: rank of the explicitly stacked Krylov matrix
/// [B AB ... A^{n-1}B], block-normalized to keep the scales comparable.
inline int brute_krylov_rank(const Matrix& A, const Matrix& B, double tol = 1e-10) {
    const int n = static_cast<int>(A.rows());
    Matrix K(n, n * B.cols());
    Matrix block = B;
    for (int p = 0; p < n; ++p) {
        const double s = block.norm();
        K.middleCols(p * B.cols(), B.cols()) = s > 0 ? Matrix(block / s) : block;
        block = A * block;
    }
    Eigen::BDCSVD<Matrix> svd(K);
    const auto& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv(rank) > tol * sv(0)) ++rank;
    return rank;
}

/// Random network with homogeneous parameter groups, complete-or-none coupling
/// between groups and random intra-group edges; always connected across groups.
/// These admit exact decompositions at (a refinement of) the group partition.
inline std::pair<NetworkSystem, ClusterSet> random_grouped_network(std::mt19937_64& rng,
                                                                   int max_groups = 4,
                                                                   int max_group_size = 4) {
    std::uniform_int_distribution<int> gcount(2, max_groups);
    std::uniform_int_distribution<int> gsize(1, max_group_size);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const int G = gcount(rng);
    std::vector<int> sizes(G);
    std::vector<double> m(G), d(G);
    for (int g = 0; g < G; ++g) {
        sizes[g] = gsize(rng);
        m[g] = 1.0 + 0.5 * g + 0.3 * unif(rng);
        d[g] = 0.2 + 0.1 * g + 0.05 * unif(rng);
    }

    NetworkSystem net;
    ClusterSet cs;
    int next = 0;
    for (int g = 0; g < G; ++g) {
        std::vector<int> idx;
        for (int j = 0; j < sizes[g]; ++j) {
            net.components.push_back(second_order_component(m[g], d[g]));
            idx.push_back(next++);
        }
        cs.clusters.push_back(std::move(idx));
    }

    std::vector<WeightedEdge> edges;
    for (int g = 0; g < G; ++g) {
        for (int h = g + 1; h < G; ++h) {
            const bool couple = (h == g + 1) || unif(rng) < 0.6;  // chain keeps it connected
            if (!couple) continue;
            for (int a : cs.clusters[g]) {
                for (int b : cs.clusters[h]) edges.push_back({a, b, 1.0});
            }
        }
        for (std::size_t p = 0; p < cs.clusters[g].size(); ++p) {
            for (std::size_t q = p + 1; q < cs.clusters[g].size(); ++q) {
                if (unif(rng) < 0.5) edges.push_back({cs.clusters[g][p], cs.clusters[g][q], 1.0});
            }
        }
    }
    net.interconnection = diffusive_coupling(net.component_count(), edges, 2);
    return {std::move(net), std::move(cs)};
}

/// All partitions of {0..N0-1} that refine `initial` (set-partition
/// enumeration per block, combined).
inline std::vector<ClusterSet> refinements_of(const ClusterSet& initial) {
    auto partitions_of = [](const std::vector<int>& ground) {
        std::vector<std::vector<std::vector<int>>> result;
        std::vector<std::vector<int>> current;
        auto rec = [&](auto&& self, std::size_t pos) -> void {
            if (pos == ground.size()) {
                result.push_back(current);
                return;
            }
            for (std::size_t b = 0; b < current.size(); ++b) {
                current[b].push_back(ground[pos]);
                self(self, pos + 1);
                current[b].pop_back();
            }
            current.push_back({ground[pos]});
            self(self, pos + 1);
            current.pop_back();
        };
        rec(rec, 0);
        return result;
    };

    std::vector<ClusterSet> all{ClusterSet{}};
    for (const auto& block : initial.clusters) {
        auto parts = partitions_of(block);
        std::vector<ClusterSet> grown;
        for (const auto& base : all) {
            for (const auto& p : parts) {
                ClusterSet cs = base;
                for (const auto& piece : p) cs.clusters.push_back(piece);
                grown.push_back(std::move(cs));
            }
        }
        all = std::move(grown);
    }
    return all;
}

}  // namespace glocal::test
