#pragma once

#include <string>
#include <utility>

#include "glocal/clustering.hpp"
#include "glocal/control.hpp"
#include "glocal/decomposition.hpp"
#include "glocal/network.hpp"
#include "glocal/subspace.hpp"

namespace glocal::io {

/// Network description file: {"components": [{"m","d"} or {"A","L","B","C"}],
/// "edges": [[k,l,alpha]...], "clusters": [[...], ...] (optional)}.
/// Component and cluster indices are 1-based on disk.
struct NetworkFile {
    NetworkSystem network;
    std::optional<ClusterSet> clusters;
};

NetworkFile load_network(const std::string& path);
void save_network(const NetworkSystem& net, const std::optional<ClusterSet>& clusters,
                  const std::string& path);

ClusterSet load_clusters(const std::string& path);
void save_clusters(const ClusterSet& cs, const std::string& path);
void save_trace(const ClusterSet& final, const PartitionTrace& trace, const std::string& path);

void save_decomposition(const HierarchicalDecomposition& hd, const std::string& path);
void save_decomposition(const RobustDecomposition& rd, const std::string& path);
HierarchicalDecomposition load_decomposition(const std::string& path);
RobustDecomposition load_robust_decomposition(const std::string& path);

/// Controllers travel as plain realizations so independently designed
/// subcontrollers can be mixed across runs.
void save_controllers(const GlocalController& ctrl, const std::string& path);
GlocalController load_controllers(const std::string& path);

void save_existence_report(const ExistenceReport& report, const std::string& path);

}  // namespace glocal::io
