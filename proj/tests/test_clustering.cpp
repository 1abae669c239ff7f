#include <doctest.h>

#include <random>

#include "glocal/clustering.hpp"
#include "glocal/subspace.hpp"
#include "helpers.hpp"

using namespace glocal;

namespace {
ClusterSet bipartition(int N0) {
    ClusterSet cs;
    cs.clusters.resize(2);
    for (int k = 0; k < N0; ++k) cs.clusters[k < (N0 + 1) / 2 ? 0 : 1].push_back(k);
    return cs;
}
}  // namespace

TEST_CASE("is_partition_of") {
    ClusterSet fine, coarse;
    fine.clusters = {{0}, {1}};
    coarse.clusters = {{0, 1}};
    CHECK(is_partition_of(fine, coarse));
    CHECK_FALSE(is_partition_of(coarse, fine));

    ClusterSet eq4, bip;
    eq4.clusters = {{0, 1, 2}, {3, 4}, {5, 6, 7, 8}};
    bip.clusters = {{0, 1, 2, 3, 4}, {5, 6, 7, 8}};
    CHECK(is_partition_of(eq4, bip));

    ClusterSet other;
    other.clusters = {{0, 2}};
    CHECK_THROWS_AS(is_partition_of(fine, other), InvalidParameter);
}

TEST_CASE("refine splits the bipartition along the parameter groups") {
    auto fx = test::make_benchmark(1);
    Matrix A = fx.net.global_state_matrix();
    ClusterSet bip = bipartition(9);

    // the condition fails for cluster 2 and the split happens in cluster 1
    auto refined = refine(A, bip, 1);
    REQUIRE(refined.cluster_count() == 3);
    CHECK(refined.clusters[0] == std::vector<int>{0, 1, 2});
    CHECK(refined.clusters[1] == std::vector<int>{3, 4});
    CHECK(refined.clusters[2] == std::vector<int>{5, 6, 7, 8});

    SUBCASE("no-op refinement is an error") {
        CHECK_THROWS_AS(refine(A, refined, 0), InvalidParameter);
    }
}

TEST_CASE("refine separates fully heterogeneous components into singletons") {
    NetworkSystem net;
    net.components.push_back(second_order_component(1.0, 0.1));
    net.components.push_back(second_order_component(2.0, 0.3));
    net.components.push_back(second_order_component(3.0, 0.5));
    net.components.push_back(second_order_component(4.0, 0.7));
    std::vector<WeightedEdge> edges;
    for (int k = 0; k < 4; ++k)
        for (int l = k + 1; l < 4; ++l) edges.push_back({k, l, 1.0});
    net.interconnection = diffusive_coupling(4, edges);
    Matrix A = net.global_state_matrix();

    ClusterSet cs;
    cs.clusters = {{0, 1, 2}, {3}};
    auto refined = refine(A, cs, 1);
    CHECK(refined.cluster_count() == 4);
}

TEST_CASE("algorithm1 on the benchmark") {
    auto fx = test::make_benchmark(1);
    Matrix A = fx.net.global_state_matrix();

    SUBCASE("bipartition converges to the group clusters in one refinement") {
        auto [cs, trace] = algorithm1(A, bipartition(9));
        REQUIRE(cs.cluster_count() == 3);
        CHECK(cs.clusters[0] == std::vector<int>{0, 1, 2});
        CHECK(cs.clusters[1] == std::vector<int>{3, 4});
        CHECK(cs.clusters[2] == std::vector<int>{5, 6, 7, 8});
        CHECK(trace.refinements <= 2);

        SUBCASE("rerunning on the output is a fixed point") {
            auto [cs2, trace2] = algorithm1(A, cs);
            CHECK(trace2.refinements == 0);
            CHECK(is_partition_of(cs2, cs));
            CHECK(is_partition_of(cs, cs2));
        }
    }
    SUBCASE("singleton input returned unchanged") {
        ClusterSet singles;
        for (int k = 0; k < 9; ++k) singles.clusters.push_back({k});
        auto [cs, trace] = algorithm1(A, singles);
        CHECK(cs.cluster_count() == 9);
        CHECK(trace.refinements == 0);
    }
    SUBCASE("single initial cluster warns and returns") {
        ClusterSet one;
        one.clusters = {{0, 1, 2, 3, 4, 5, 6, 7, 8}};
        auto [cs, trace] = algorithm1(A, one);
        CHECK(cs.cluster_count() == 1);
        CHECK(trace.termination.find("single") != std::string::npos);
    }
}

TEST_CASE("partition traces form a refinement chain and are deterministic") {
    auto fx = test::make_benchmark(1);
    Matrix A = fx.net.global_state_matrix();
    auto [cs1, trace1] = algorithm2(A, bipartition(9));
    auto [cs2, trace2] = algorithm2(A, bipartition(9));

    REQUIRE(trace1.steps.size() == trace2.steps.size());
    for (std::size_t s = 0; s < trace1.steps.size(); ++s) {
        CHECK(trace1.steps[s].clusters.clusters == trace2.steps[s].clusters.clusters);
        if (s > 0) {
            CHECK(is_partition_of(trace1.steps[s].clusters, trace1.steps[s - 1].clusters));
        }
    }
}

TEST_CASE("algorithm2 on the benchmark adds nothing (reachability already holds)") {
    auto fx = test::make_benchmark(1);
    Matrix A = fx.net.global_state_matrix();
    auto [cs1, t1] = algorithm1(A, bipartition(9));
    auto [cs2, t2] = algorithm2(A, bipartition(9));
    CHECK(cs1.clusters == cs2.clusters);
}

TEST_CASE("algorithm2 splits unreachable clusters to singletons and certifies") {
    NetworkSystem net;
    for (int k = 0; k < 4; ++k) net.components.push_back(second_order_component(1.0, 0.1));
    net.interconnection = diffusive_coupling(4, {{0, 1, 1.0}, {2, 3, 1.0}});  // two islands
    Matrix A = net.global_state_matrix();

    ClusterSet cs0;
    cs0.clusters = {{0, 1}, {2, 3}};
    auto [cs, trace] = algorithm2(A, cs0);
    CHECK(cs.cluster_count() == 4);
    CHECK(existence_check(A, cs, 2).overall);
}

TEST_CASE("algorithm2 output always passes the existence check on random networks") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 25; ++trial) {
        auto [net, groups] = test::random_grouped_network(rng, 4, 3);
        const int N0 = net.component_count();
        if (N0 < 2) continue;
        Matrix A = net.global_state_matrix();
        auto [cs, trace] = algorithm2(A, bipartition(N0));
        CHECK(existence_check(A, cs, 2).overall);
    }
}

TEST_CASE("algorithm1 output is the coarsest admissible refinement (exhaustive)") {
    std::mt19937_64 rng(77);
    int verified = 0;
    for (int trial = 0; trial < 12; ++trial) {
        auto [net, groups] = test::random_grouped_network(rng, 3, 3);
        const int N0 = net.component_count();
        if (N0 > 6 || N0 < 2) continue;
        Matrix A = net.global_state_matrix();
        ClusterSet initial = bipartition(N0);
        auto [out, trace] = algorithm1(A, initial);

        for (const auto& candidate : test::refinements_of(initial)) {
            auto report = existence_check(A, candidate, 2);
            bool admissible = true;
            for (const auto& c : report.local) admissible = admissible && c.holds;
            if (admissible) {
                CHECK(is_partition_of(candidate, out));
                ++verified;
            }
        }
    }
    CHECK(verified > 10);
}
