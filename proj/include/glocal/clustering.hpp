#pragma once

#include <string>
#include <vector>

#include "glocal/common.hpp"
#include "glocal/network.hpp"

namespace glocal {

/// true iff every cluster of `fine` is contained in some cluster of `coarse`.
/// Throws InvalidParameter when the ground sets differ.
bool is_partition_of(const ClusterSet& fine, const ClusterSet& coarse);

struct PartitionTrace {
    struct Step {
        ClusterSet clusters;      // cluster set after this step
        int offending = -1;       // 0-based cluster that triggered it, -1 if none
        std::string action;       // "refine", "reachability-split", ...
    };
    std::vector<Step> steps;      // steps[0] is the initial set
    std::string termination;
    int refinements = 0;          // strict refinement steps performed
};

struct ClusteringOptions {
    double tol = 1e-8;            // inclusion tolerance for the subspace conditions
    int component_dim = 2;
};

/// One partition step: requires that the local existence condition fails for
/// cluster i; splits the other clusters by equality of the row blocks of the
/// projected controllability matrix (after orthonormalizing its column space),
/// intersected with the current clusters.  Throws InvalidParameter when the
/// condition actually holds (no-op).
ClusterSet refine(const Matrix& A, const ClusterSet& cs, int offending,
                  const ClusteringOptions& opts = {});

/// Greedy loop: refine on the first offending cluster until the local
/// condition holds everywhere.  A single-cluster initial set is returned
/// unchanged (warning recorded in the trace), since the condition is vacuous.
std::pair<ClusterSet, PartitionTrace> algorithm1(const Matrix& A, const ClusterSet& initial,
                                                 const ClusteringOptions& opts = {});

/// algorithm1 plus reachability repair: clusters violating the
/// reachability-from-others condition are split into singletons and
/// algorithm1 is rerun, until the condition holds (or only singletons are
/// left, which is reported in the trace termination).
std::pair<ClusterSet, PartitionTrace> algorithm2(const Matrix& A, const ClusterSet& initial,
                                                 const ClusteringOptions& opts = {});

}  // namespace glocal
