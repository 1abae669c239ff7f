#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "glocal/clustering.hpp"
#include "glocal/control.hpp"
#include "glocal/decomposition.hpp"
#include "glocal/io.hpp"
#include "glocal/network.hpp"
#include "glocal/simulation.hpp"
#include "glocal/subspace.hpp"

namespace fs = std::filesystem;
using namespace glocal;

namespace {

struct Scenario {
    std::string network_file;
    int benchmark_n0 = 0;
    double perturb = 0.0;
    std::uint64_t seed = 0;
    std::string clusters = "";  // "", "auto", "singletons", or a file
    std::string initial = "bipartition";
    bool robust = false;
    double horizon = 10.0;
    double step = 1e-3;
    double tol = kInclusionTol;
    std::string out;

    // LQR weights (benchmark defaults)
    double q_theta = 1.0;
    double q_omega = 1e4;
    double r_weight = 1e2;
    double qo_weight = 1e3;
};

void add_source_flags(CLI::App* cmd, Scenario& sc) {
    auto* net = cmd->add_option("--network", sc.network_file, "network description file");
    auto* bench = cmd->add_option("--benchmark", sc.benchmark_n0,
                                  "built-in benchmark with replication factor n0");
    net->excludes(bench);
    cmd->add_option("--perturb", sc.perturb, "relative parameter perturbation magnitude");
    cmd->add_option("--seed", sc.seed, "perturbation / randomization seed");
    cmd->add_option("--clusters", sc.clusters,
                    "cluster source: file, 'auto', 'singletons' (default: benchmark clusters or "
                    "the network file's)");
    cmd->add_flag("--robust", sc.robust, "use the robust decomposition");
    cmd->add_option("--tol", sc.tol, "inclusion tolerance");
    cmd->add_option("--out", sc.out, "output directory (default $GLOCAL_OUT_DIR or '.')");
}

void add_sim_flags(CLI::App* cmd, Scenario& sc) {
    cmd->add_option("--horizon", sc.horizon, "simulation horizon [s]");
    cmd->add_option("--step", sc.step, "integration step [s]");
}

void add_weight_flags(CLI::App* cmd, Scenario& sc) {
    cmd->add_option("--q-theta", sc.q_theta, "LQR angle weight");
    cmd->add_option("--q-omega", sc.q_omega, "LQR frequency weight");
    cmd->add_option("--r-weight", sc.r_weight, "LQR input weight");
    cmd->add_option("--qo-weight", sc.qo_weight, "observer state weight");
}

fs::path out_dir(const Scenario& sc) {
    std::string dir = sc.out;
    if (dir.empty()) {
        const char* env = std::getenv("GLOCAL_OUT_DIR");
        dir = env ? env : ".";
    }
    fs::create_directories(dir);
    return {dir};
}

struct LoadedScenario {
    NetworkSystem net;
    ClusterSet clusters;
    ClusteredSystem sys;
};

std::pair<NetworkSystem, std::optional<ClusterSet>> load_source(const Scenario& sc) {
    if (sc.benchmark_n0 > 0) {
        std::optional<Perturbation> p;
        if (sc.perturb > 0.0) p = Perturbation{sc.perturb, sc.seed};
        auto [net, cs] = benchmark_network(sc.benchmark_n0, p);
        return {std::move(net), std::move(cs)};
    }
    if (sc.network_file.empty()) {
        throw CLI::ValidationError("--network or --benchmark is required");
    }
    auto file = io::load_network(sc.network_file);
    return {std::move(file.network), std::move(file.clusters)};
}

ClusterSet resolve_clusters(const Scenario& sc, const NetworkSystem& net,
                            const std::optional<ClusterSet>& suggested) {
    const int N0 = net.component_count();
    if (sc.clusters.empty()) {
        if (suggested) return *suggested;
        throw CLI::ValidationError("no clusters given and the source suggests none");
    }
    if (sc.clusters == "singletons") {
        ClusterSet cs;
        for (int k = 0; k < N0; ++k) cs.clusters.push_back({k});
        return cs;
    }
    if (sc.clusters == "auto") {
        ClusterSet initial;
        initial.clusters.resize(2);
        for (int k = 0; k < N0; ++k) initial.clusters[k < (N0 + 1) / 2 ? 0 : 1].push_back(k);
        auto [cs, trace] = algorithm2(net.global_state_matrix(), initial,
                                      {sc.tol, net.component_dim()});
        return cs;
    }
    return io::load_clusters(sc.clusters);
}

LoadedScenario load_scenario(const Scenario& sc) {
    auto [net, suggested] = load_source(sc);
    ClusterSet cs = resolve_clusters(sc, net, suggested);
    ClusteredSystem sys = clustered_system(net, cs);
    return {std::move(net), std::move(cs), std::move(sys)};
}

void print_report(const ExistenceReport& report) {
    for (std::size_t i = 0; i < report.local.size(); ++i) {
        std::printf("  cluster %zu: local condition %s (residual %.3e)   reachable-from-others "
                    "%s (residual %.3e)\n",
                    i + 1, report.local[i].holds ? "OK  " : "FAIL", report.local[i].residual,
                    report.single_cluster ? "n/a " : (report.reachable[i].holds ? "OK  " : "FAIL"),
                    report.reachable[i].residual);
    }
    std::printf("  global invariance: %s (residual %.3e)\n",
                report.global.holds ? "OK" : "FAIL", report.global.residual);
    std::printf("  overall: %s\n", report.overall ? "decomposable" : "NOT decomposable");
}

GlocalController design_controllers(const Scenario& sc, const ClusteredSystem& sys,
                                    const HierarchicalDecomposition& hd, bool with_global,
                                    bool with_local) {
    GlocalController ctrl;
    auto weights = [&](int half_states, int inputs) {
        Matrix Q = Matrix::Zero(2 * half_states, 2 * half_states);
        for (int k = 0; k < half_states; ++k) {
            Q(2 * k, 2 * k) = sc.q_theta;
            Q(2 * k + 1, 2 * k + 1) = sc.q_omega;
        }
        Matrix R = sc.r_weight * Matrix::Identity(inputs, inputs);
        return std::make_pair(Q, R);
    };
    if (with_global) {
        const int N = sys.cluster_count();
        auto [Q0, R0] = weights(N, N);
        Matrix Qo = sc.qo_weight * Matrix::Identity(2 * N, 2 * N);
        ctrl.global = lqr_observer_controller(hd.A0, sys.B0, sys.C0, Q0, R0, Qo, R0);
    }
    if (with_local) {
        for (int i = 0; i < sys.cluster_count(); ++i) {
            auto [Qi, Ri] = weights(sys.r[i], sys.r[i]);
            Matrix Qo = sc.qo_weight * Matrix::Identity(2 * sys.r[i], 2 * sys.r[i]);
            ctrl.local.push_back(
                lqr_observer_controller(hd.Ai[i], sys.Bi[i], sys.Ci[i], Qi, Ri, Qo, Ri));
            ctrl.observers.push_back(build_functional_observer(sys, hd, i));
        }
    }
    return ctrl;
}

Vector disturbance_state(const ClusteredSystem& sys, int cluster, double magnitude) {
    Vector x0 = Vector::Zero(sys.state_dim());
    int off = 0;
    for (int i = 0; i < sys.cluster_count(); ++i) {
        if (i == cluster) {
            for (int j = 0; j < sys.r[i]; ++j) {
                const double sign = (j % 2 == 0) ? 1.0 : -1.0;
                x0(off + 2 * j) = magnitude * sign * (1.0 + 0.1 * j);  // angle offsets only
            }
        }
        off += sys.cluster_state_dim(i);
    }
    return x0;
}

int cmd_check(const Scenario& sc) {
    auto [net, suggested] = load_source(sc);
    ClusterSet cs = resolve_clusters(sc, net, suggested);
    const auto t0 = std::chrono::steady_clock::now();
    // the geometric conditions need only A and the partition, so they apply
    // even when the clusters do not admit the I/O lifting (Assumption 1)
    auto report = existence_check(net.global_state_matrix(), cs, net.component_dim(), sc.tol);
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("existence check (%.3f s):\n", dt);
    print_report(report);
    io::save_existence_report(report, (out_dir(sc) / "existence.json").string());
    if (!report.overall) {
        if (report.first_offending >= 0) {
            std::printf("  first offending cluster: %d\n", report.first_offending + 1);
        }
        try {
            auto rd = robust_decompose(clustered_system(net, cs));
            std::printf("  no exact hierarchical representation for these clusters; leakage "
                        "||F0||=%.3e, max ||Fi||=%.3e -- consider --robust\n",
                        rd.leakage_F0, rd.max_leakage());
        } catch (const InvalidParameter&) {
            std::printf("  no exact hierarchical representation and no I/O lifting for these "
                        "clusters (Assumption-1 violation); refine them first\n");
        }
        return 1;
    }
    return 0;
}

int cmd_cluster(const Scenario& sc, const std::string& initial_arg) {
    auto [net, suggested] = load_source(sc);
    const int N0 = net.component_count();
    ClusterSet initial;
    if (initial_arg == "bipartition") {
        initial.clusters.resize(2);
        for (int k = 0; k < N0; ++k) initial.clusters[k < (N0 + 1) / 2 ? 0 : 1].push_back(k);
    } else {
        initial = io::load_clusters(initial_arg);
    }
    auto [cs, trace] =
        algorithm2(net.global_state_matrix(), initial, {sc.tol, net.component_dim()});
    std::printf("clustering: %d -> %d clusters in %d refinement step(s); %s\n",
                initial.cluster_count(), cs.cluster_count(), trace.refinements,
                trace.termination.c_str());
    for (std::size_t i = 0; i < cs.clusters.size(); ++i) {
        std::printf("  cluster %zu: {", i + 1);
        for (std::size_t j = 0; j < cs.clusters[i].size(); ++j) {
            std::printf("%s%d", j ? "," : "", cs.clusters[i][j] + 1);
        }
        std::printf("}\n");
    }
    const auto dir = out_dir(sc);
    io::save_clusters(cs, (dir / "clusters.json").string());
    io::save_trace(cs, trace, (dir / "trace.json").string());
    return 0;
}

int cmd_decompose(const Scenario& sc) {
    auto loaded = load_scenario(sc);
    const auto dir = out_dir(sc);
    if (sc.robust) {
        auto rd = robust_decompose(loaded.sys);
        io::save_decomposition(rd, (dir / "decomposition.json").string());
        auto grid = error_gain_grid(rd);
        double peak = 0.0, peak_w = 0.0;
        for (auto [w, g] : grid) {
            if (g > peak) {
                peak = g;
                peak_w = w;
            }
        }
        std::printf("robust decomposition: ||F0||=%.6e max||Fi||=%.6e  error-gain peak %.4e at "
                    "%.4g rad/s\n",
                    rd.leakage_F0, rd.max_leakage(), peak, peak_w);
        std::ofstream gout(dir / "error_gain.csv");
        gout << "omega,gain\n";
        for (auto [w, g] : grid) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", w, g);
            gout << buf;
        }
        return 0;
    }
    auto hd = decompose(loaded.sys, {sc.tol, false});
    io::save_decomposition(hd, (dir / "decomposition.json").string());
    std::printf("exact decomposition: max residual %.3e\n", hd.max_residual());
    return 0;
}

int cmd_design(const Scenario& sc, bool no_global, bool no_local) {
    auto loaded = load_scenario(sc);
    const auto dir = out_dir(sc);
    HierarchicalDecomposition hd;
    if (sc.robust) {
        auto rd = robust_decompose(loaded.sys);
        io::save_decomposition(rd, (dir / "decomposition.json").string());
        hd = rd.hd;
        GlocalController ctrl = design_controllers(sc, loaded.sys, hd, !no_global, !no_local);
        io::save_controllers(ctrl, (dir / "controllers.json").string());
        if (ctrl.global) {
            auto split =
                split_spectrum(eigenvalues(robust_global_loop(loaded.sys, rd, *ctrl.global)));
            std::printf("robust global loop: %d boundary mode(s), stable abscissa %.5f\n",
                        split.boundary_count, split.stable_abscissa);
        }
    } else {
        auto report = existence_check(loaded.sys, sc.tol);
        if (!report.overall) {
            std::fprintf(stderr,
                         "design: existence check failed (first offending cluster %d); rerun "
                         "with --robust or fix the clusters\n",
                         report.first_offending + 1);
            return 2;
        }
        hd = decompose(loaded.sys, {sc.tol, false});
        io::save_decomposition(hd, (dir / "decomposition.json").string());
        GlocalController ctrl = design_controllers(sc, loaded.sys, hd, !no_global, !no_local);
        io::save_controllers(ctrl, (dir / "controllers.json").string());
    }
    std::printf("controllers written to %s\n", (dir / "controllers.json").c_str());
    return 0;
}

int cmd_simulate(const Scenario& sc, bool free_run, bool local_only, bool global_only,
                 bool glocal_run, int disturb_cluster, double disturb_mag,
                 const std::string& controllers_file) {
    auto loaded = load_scenario(sc);
    const auto dir = out_dir(sc);
    if (!free_run && !local_only && !global_only && !glocal_run) free_run = true;

    HierarchicalDecomposition hd;
    if (sc.robust) {
        hd = robust_decompose(loaded.sys).hd;
    } else {
        auto report = existence_check(loaded.sys, sc.tol);
        if (!report.overall && (local_only || global_only || glocal_run)) {
            std::fprintf(stderr, "simulate: existence check failed; rerun with --robust\n");
            return 2;
        }
        if (local_only || global_only || glocal_run) hd = decompose(loaded.sys, {sc.tol, false});
    }

    GlocalController full;
    if (local_only || global_only || glocal_run) {
        if (!controllers_file.empty()) {
            full = io::load_controllers(controllers_file);
        } else {
            full = design_controllers(sc, loaded.sys, hd, true, true);
        }
    }

    const Vector x0 = disturbance_state(loaded.sys, disturb_cluster - 1, disturb_mag);
    auto run = [&](const GlocalController& ctrl, const std::string& name) {
        auto loop = assemble_glocal(loaded.sys, ctrl);
        auto traj = loop.response(x0, sc.horizon, sc.step);
        write_csv(traj, (dir / (name + ".csv")).string());
        const auto split = split_spectrum(loop.spectrum());
        std::printf("%-12s dim %4ld  boundary modes %2d  stable abscissa %+.5f  -> %s.csv\n",
                    name.c_str(), static_cast<long>(loop.A.rows()), split.boundary_count,
                    split.stable_abscissa, name.c_str());
    };

    if (free_run) run({}, "free");
    if (local_only) {
        GlocalController ctrl;
        ctrl.local = full.local;
        ctrl.observers = full.observers;
        run(ctrl, "local_only");
    }
    if (global_only) {
        GlocalController ctrl;
        ctrl.global = full.global;
        run(ctrl, "global_only");
    }
    if (glocal_run) run(full, "glocal");
    return 0;
}

struct BenchRow {
    int n0 = 0;
    int states = 0;
    double glocal_mean = 0, glocal_std = 0;
    double centralized_mean = 0, centralized_std = 0;
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / (xs.size() - 1) : 0.0;
    return {mean, std::sqrt(var)};
}

int cmd_bench(const Scenario& sc, std::vector<int> n0_list, int reps,
              std::vector<int> cluster_n0_list) {
    if (n0_list.empty()) n0_list = {10, 15, 20, 25};
    if (cluster_n0_list.empty()) cluster_n0_list = {1, 2, 3};
    const auto dir = out_dir(sc);
    Scenario weights = sc;

    std::vector<BenchRow> rows;
    for (int n0 : n0_list) {
        auto [net, cs] = benchmark_network(n0);
        auto sys = clustered_system(net, cs);
        auto hd = decompose(sys, {1e-6, false});
        std::vector<double> tg, tc;
        for (int rep = 0; rep < reps; ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            design_controllers(weights, sys, hd, true, true);
            tg.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

            const Matrix A = sys.A;
            const Matrix B = net.block_diag_B();
            const Matrix C = net.block_diag_C();
            t0 = std::chrono::steady_clock::now();
            {
                const int nc = net.component_count();
                Matrix Q = Matrix::Zero(A.rows(), A.rows());
                for (int k = 0; k < nc; ++k) {
                    Q(2 * k, 2 * k) = weights.q_theta;
                    Q(2 * k + 1, 2 * k + 1) = weights.q_omega;
                }
                Matrix R = weights.r_weight * Matrix::Identity(nc, nc);
                Matrix Qo = weights.qo_weight * Matrix::Identity(A.rows(), A.rows());
                lqr_observer_controller(A, B, C, Q, R, Qo, R);
            }
            tc.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        BenchRow row;
        row.n0 = n0;
        row.states = sys.state_dim();
        std::tie(row.glocal_mean, row.glocal_std) = mean_std(tg);
        std::tie(row.centralized_mean, row.centralized_std) = mean_std(tc);
        rows.push_back(row);
        std::printf("n0=%3d  n=%4d  glocal %8.3f s (+-%.3f)   centralized %8.3f s (+-%.3f)\n",
                    row.n0, row.states, row.glocal_mean, row.glocal_std, row.centralized_mean,
                    row.centralized_std);
    }
    {
        std::ofstream out(dir / "bench_design.csv");
        out << "n0,states,glocal_mean_s,glocal_std_s,centralized_mean_s,centralized_std_s\n";
        for (const auto& r : rows) {
            out << r.n0 << "," << r.states << "," << r.glocal_mean << "," << r.glocal_std << ","
                << r.centralized_mean << "," << r.centralized_std << "\n";
        }
    }
    if (rows.size() >= 2) {
        auto slope = [&](auto pick) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (const auto& r : rows) {
                const double x = std::log(static_cast<double>(r.n0)), y = std::log(pick(r));
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            const double m = rows.size();
            return (m * sxy - sx * sy) / (m * sxx - sx * sx);
        };
        std::printf("log-log slopes: glocal %.3f, centralized %.3f\n",
                    slope([](const BenchRow& r) { return r.glocal_mean; }),
                    slope([](const BenchRow& r) { return r.centralized_mean; }));
    }

    // clustering times: (i) three clusters growing, (ii) cluster count growing
    std::ofstream cout_(dir / "bench_clustering.csv");
    cout_ << "regime,n0,states,final_clusters,mean_s,std_s\n";
    for (int n0 : cluster_n0_list) {
        for (int regime = 0; regime < 2; ++regime) {
            NetworkSystem net;
            if (regime == 0) {
                net = benchmark_network(n0).first;
            } else {
                // n0 blocks of the 9-component pattern, parameters varied per
                // block so every block yields its own three clusters
                const int N0 = 9 * n0;
                for (int g = 0; g < n0; ++g) {
                    const double ms = 1.0 + 0.25 * g, ds = 1.0 + 0.4 * g;
                    for (int j = 0; j < 3; ++j) net.components.push_back(second_order_component(3.0 * ms, 0.4 * ds));
                    for (int j = 0; j < 2; ++j) net.components.push_back(second_order_component(2.0 * ms, 0.3 * ds));
                    for (int j = 0; j < 4; ++j) net.components.push_back(second_order_component(1.0 * ms, 0.2 * ds));
                }
                std::vector<WeightedEdge> edges;
                for (int k = 0; k < N0; ++k) {
                    for (int l = k + 1; l < N0; ++l) edges.push_back({k, l, 1.0});
                }
                net.interconnection = diffusive_coupling(N0, edges, 2);
            }
            const int N0 = net.component_count();
            // split aligned with the first parameter group so case (i) really
            // terminates at three clusters
            ClusterSet initial;
            initial.clusters.resize(2);
            for (int k = 0; k < N0; ++k) initial.clusters[k < 3 * n0 ? 0 : 1].push_back(k);
            const Matrix A = net.global_state_matrix();
            std::vector<double> ts;
            int final_clusters = 0;
            for (int rep = 0; rep < reps; ++rep) {
                auto t0 = std::chrono::steady_clock::now();
                auto [cs, trace] = algorithm2(A, initial, {sc.tol, 2});
                ts.push_back(
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
                final_clusters = cs.cluster_count();
            }
            auto [mean, sd] = mean_std(ts);
            cout_ << (regime == 0 ? "fixed" : "growing") << "," << n0 << "," << 2 * N0 << ","
                  << final_clusters << "," << mean << "," << sd << "\n";
            std::printf("clustering %-7s n0=%2d n=%4d -> %3d clusters: %.3f s (+-%.3f)\n",
                        regime == 0 ? "fixed" : "growing", n0, 2 * N0, final_clusters, mean, sd);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical model decomposition and glocal controller workbench"};
    app.require_subcommand(1);

    Scenario sc;
    std::string initial_arg = "bipartition";
    bool no_global = false, no_local = false;
    bool free_run = false, local_only = false, global_only = false, glocal_run = false;
    int disturb_cluster = 1;
    double disturb_mag = 1.0;
    std::string controllers_file;
    std::vector<int> n0_list, cluster_n0_list;
    int reps = 3;

    auto* check = app.add_subcommand("check", "evaluate the decomposition existence conditions");
    add_source_flags(check, sc);

    auto* cluster = app.add_subcommand("cluster", "run the clustering algorithm");
    add_source_flags(cluster, sc);
    cluster->add_option("--initial", initial_arg, "initial cluster set: file or 'bipartition'");

    auto* decomp = app.add_subcommand("decompose", "construct the (robust) decomposition");
    add_source_flags(decomp, sc);

    auto* design = app.add_subcommand("design", "synthesize the glocal subcontrollers");
    add_source_flags(design, sc);
    add_weight_flags(design, sc);
    design->add_flag("--no-global", no_global, "skip the global subcontroller");
    design->add_flag("--no-local", no_local, "skip the local subcontrollers");

    auto* sim = app.add_subcommand("simulate", "closed-loop responses to an initial disturbance");
    add_source_flags(sim, sc);
    add_sim_flags(sim, sc);
    add_weight_flags(sim, sc);
    sim->add_flag("--free", free_run, "open-loop response");
    sim->add_flag("--local-only", local_only, "local subcontrollers only");
    sim->add_flag("--global-only", global_only, "global subcontroller only");
    sim->add_flag("--glocal", glocal_run, "full glocal controller");
    sim->add_option("--disturb-cluster", disturb_cluster, "cluster receiving the disturbance (1-based)");
    sim->add_option("--disturb-mag", disturb_mag, "disturbance magnitude");
    sim->add_option("--controllers", controllers_file, "reuse exported controllers");

    auto* bench = app.add_subcommand("bench", "design-time and clustering-time benchmarks");
    add_source_flags(bench, sc);
    add_weight_flags(bench, sc);
    bench->add_option("--n0-list", n0_list, "benchmark sizes for the design-time table");
    bench->add_option("--cluster-n0-list", cluster_n0_list, "sizes for the clustering table");
    bench->add_option("--reps", reps, "repetitions per measurement");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) return cmd_check(sc);
        if (cluster->parsed()) return cmd_cluster(sc, initial_arg);
        if (decomp->parsed()) return cmd_decompose(sc);
        if (design->parsed()) return cmd_design(sc, no_global, no_local);
        if (sim->parsed()) {
            return cmd_simulate(sc, free_run, local_only, global_only, glocal_run,
                                disturb_cluster, disturb_mag, controllers_file);
        }
        if (bench->parsed()) return cmd_bench(sc, n0_list, reps, cluster_n0_list);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
