#include "glocal/clustering.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "glocal/subspace.hpp"

namespace glocal {

bool is_partition_of(const ClusterSet& fine, const ClusterSet& coarse) {
    std::set<int> gf, gc;
    for (const auto& c : fine.clusters) gf.insert(c.begin(), c.end());
    for (const auto& c : coarse.clusters) gc.insert(c.begin(), c.end());
    if (gf != gc) throw InvalidParameter("is_partition_of: ground sets differ");

    std::map<int, int> owner;
    for (std::size_t j = 0; j < coarse.clusters.size(); ++j) {
        for (int k : coarse.clusters[j]) owner[k] = static_cast<int>(j);
    }
    for (const auto& c : fine.clusters) {
        if (c.empty()) continue;
        const int j = owner.at(c.front());
        for (int k : c) {
            if (owner.at(k) != j) return false;
        }
    }
    return true;
}

namespace {

ClusterSet sorted_clusters(ClusterSet cs) {
    for (auto& c : cs.clusters) std::sort(c.begin(), c.end());
    std::sort(cs.clusters.begin(), cs.clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return cs;
}

bool same_cluster_set(const ClusterSet& a, const ClusterSet& b) {
    return sorted_clusters(a).clusters == sorted_clusters(b).clusters;
}

}  // namespace

ClusterSet refine(const Matrix& A, const ClusterSet& cs, int offending,
                  const ClusteringOptions& opts) {
    const int n0 = opts.component_dim;
    const int N0 = static_cast<int>(A.rows()) / n0;
    cs.validate(N0);
    if (offending < 0 || offending >= cs.cluster_count()) {
        throw InvalidParameter("refine: offending index out of range");
    }

    auto report = existence_check(A, cs, n0, opts.tol);
    if (report.local[offending].holds) {
        throw InvalidParameter("refine: condition already holds for cluster " +
                               std::to_string(offending + 1) + " (no-op)");
    }

    // P_i in the asked-for (original) component ordering
    Matrix Pi = Matrix::Zero(A.rows(), n0 * cs.clusters[offending].size());
    for (std::size_t j = 0; j < cs.clusters[offending].size(); ++j) {
        Pi.block(n0 * cs.clusters[offending][j], n0 * j, n0, n0) = Matrix::Identity(n0, n0);
    }
    auto reach = controllable_subspace(A, Pi, kRankTol);
    Matrix W = reach.Q - Pi * (Pi.transpose() * reach.Q);  // project out im P_i
    Matrix Q = orthonormal_basis(W, kRankTol).Q;
    // Row blocks of Q are only defined up to a right orthogonal factor (the
    // subspace has symmetric multiplicities), so compare rows of the
    // basis-independent projector instead: components k, l can be lumped iff
    // every vector of the projected controllable subspace has equal k and l
    // blocks, i.e. the corresponding projector row blocks coincide.
    Matrix proj = Q * Q.transpose();

    double max_row = 0.0;
    for (int k = 0; k < N0; ++k) max_row = std::max(max_row, proj.middleRows(n0 * k, n0).norm());
    const double row_tol = opts.tol * std::max(1.0, max_row);

    std::vector<int> in_offending(N0, 0);
    for (int k : cs.clusters[offending]) in_offending[k] = 1;
    std::vector<std::vector<int>> groups;
    for (int k = 0; k < N0; ++k) {
        if (in_offending[k]) continue;
        bool placed = false;
        for (auto& g : groups) {
            if ((proj.middleRows(n0 * k, n0) - proj.middleRows(n0 * g.front(), n0)).norm() <=
                row_tol) {
                g.push_back(k);
                placed = true;
                break;
            }
        }
        if (!placed) groups.push_back({k});
    }

    // intersect with the current clusters so the result refines cs
    ClusterSet out;
    out.clusters.push_back(cs.clusters[offending]);
    for (std::size_t j = 0; j < cs.clusters.size(); ++j) {
        if (static_cast<int>(j) == offending) continue;
        for (const auto& g : groups) {
            std::vector<int> part;
            for (int k : g) {
                if (std::find(cs.clusters[j].begin(), cs.clusters[j].end(), k) !=
                    cs.clusters[j].end()) {
                    part.push_back(k);
                }
            }
            if (!part.empty()) out.clusters.push_back(std::move(part));
        }
    }
    return sorted_clusters(out);
}

std::pair<ClusterSet, PartitionTrace> algorithm1(const Matrix& A, const ClusterSet& initial,
                                                 const ClusteringOptions& opts) {
    const int n0 = opts.component_dim;
    const int N0 = static_cast<int>(A.rows()) / n0;
    initial.validate(N0);

    PartitionTrace trace;
    ClusterSet current = sorted_clusters(initial);
    trace.steps.push_back({current, -1, "initial"});

    if (current.cluster_count() < 2) {
        trace.termination = "single initial cluster: condition vacuous, returned unchanged";
        return {current, trace};
    }

    while (true) {
        auto report = existence_check(A, current, n0, opts.tol);
        if (report.first_offending < 0) {
            trace.termination = "all clusters satisfy the local condition";
            break;
        }
        ClusterSet next = refine(A, current, report.first_offending, opts);
        trace.refinements += 1;
        trace.steps.push_back({next, report.first_offending, "refine"});
        if (same_cluster_set(next, current)) {
            trace.termination = "refinement reached a fixed point without progress";
            break;  // defensive: refine on a failing cluster always splits something
        }
        current = std::move(next);
    }
    return {current, trace};
}

std::pair<ClusterSet, PartitionTrace> algorithm2(const Matrix& A, const ClusterSet& initial,
                                                 const ClusteringOptions& opts) {
    const int n0 = opts.component_dim;
    const int N0 = static_cast<int>(A.rows()) / n0;
    initial.validate(N0);

    PartitionTrace trace;
    ClusterSet current = sorted_clusters(initial);
    trace.steps.push_back({current, -1, "initial"});

    if (current.cluster_count() < 2) {
        trace.termination = "single initial cluster: returned unchanged";
        return {current, trace};
    }

    while (true) {
        auto [refined, inner] = algorithm1(A, current, opts);
        trace.refinements += inner.refinements;
        for (std::size_t s = 1; s < inner.steps.size(); ++s) trace.steps.push_back(inner.steps[s]);
        current = std::move(refined);

        auto report = existence_check(A, current, n0, opts.tol);
        std::vector<int> failing;
        for (int j = 0; j < current.cluster_count(); ++j) {
            if (!report.single_cluster && !report.reachable[j].holds) failing.push_back(j);
        }
        if (failing.empty()) {
            trace.termination = "local and reachability conditions hold for all clusters";
            break;
        }
        bool can_split = false;
        for (int j : failing) can_split = can_split || current.clusters[j].size() > 1;
        if (!can_split) {
            trace.termination =
                "degenerate: reachability fails only on singleton clusters (reported, not an error)";
            break;
        }
        ClusterSet next;
        for (int j = 0; j < current.cluster_count(); ++j) {
            if (std::find(failing.begin(), failing.end(), j) == failing.end()) {
                next.clusters.push_back(current.clusters[j]);
            } else {
                for (int k : current.clusters[j]) next.clusters.push_back({k});
            }
        }
        next = sorted_clusters(next);
        trace.refinements += 1;
        trace.steps.push_back({next, failing.front(), "reachability-split"});
        current = std::move(next);
    }
    return {current, trace};
}

}  // namespace glocal
