#include "glocal/io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace glocal::io {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (int i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    const int rows = static_cast<int>(j.size());
    const int cols = rows ? static_cast<int>(j.at(0).size()) : 0;
    Matrix M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int c = 0; c < cols; ++c) M(i, c) = j.at(i).at(c).get<double>();
    }
    return M;
}

json clusters_to_json(const ClusterSet& cs) {
    json out = json::array();
    for (const auto& c : cs.clusters) {
        json idx = json::array();
        for (int k : c) idx.push_back(k + 1);  // 1-based on disk
        out.push_back(std::move(idx));
    }
    return out;
}

ClusterSet clusters_from_json(const json& j) {
    ClusterSet cs;
    for (const auto& c : j) {
        std::vector<int> idx;
        for (const auto& k : c) idx.push_back(k.get<int>() - 1);
        cs.clusters.push_back(std::move(idx));
    }
    return cs;
}

json load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

json controller_to_json(const DynamicController& c) {
    return json{{"A", matrix_to_json(c.A_K)},
                {"B", matrix_to_json(c.B_K)},
                {"C", matrix_to_json(c.C_K)},
                {"state_gain", matrix_to_json(c.state_gain)},
                {"observer_gain", matrix_to_json(c.observer_gain)},
                {"deflated_observer_modes", c.deflated_observer_modes}};
}

DynamicController controller_from_json(const json& j) {
    DynamicController c;
    c.A_K = matrix_from_json(j.at("A"));
    c.B_K = matrix_from_json(j.at("B"));
    c.C_K = matrix_from_json(j.at("C"));
    if (j.contains("state_gain")) c.state_gain = matrix_from_json(j.at("state_gain"));
    if (j.contains("observer_gain")) c.observer_gain = matrix_from_json(j.at("observer_gain"));
    c.deflated_observer_modes = j.value("deflated_observer_modes", 0);
    return c;
}

json observer_to_json(const FunctionalObserver& o) {
    return json{{"cluster", o.cluster + 1},
                {"A_hat", matrix_to_json(o.Ahat)},
                {"A_sub", matrix_to_json(o.Asub)},
                {"L", matrix_to_json(o.L)},
                {"B", matrix_to_json(o.B)},
                {"C", matrix_to_json(o.C)},
                {"global_input", matrix_to_json(o.global_input)}};
}

FunctionalObserver observer_from_json(const json& j) {
    FunctionalObserver o;
    o.cluster = j.at("cluster").get<int>() - 1;
    o.Ahat = matrix_from_json(j.at("A_hat"));
    o.Asub = matrix_from_json(j.at("A_sub"));
    o.L = matrix_from_json(j.at("L"));
    o.B = matrix_from_json(j.at("B"));
    o.C = matrix_from_json(j.at("C"));
    o.global_input = matrix_from_json(j.at("global_input"));
    return o;
}

}  // namespace

NetworkFile load_network(const std::string& path) {
    const json j = load_file(path);
    NetworkFile file;
    for (const auto& cj : j.at("components")) {
        if (cj.contains("m")) {
            file.network.components.push_back(
                second_order_component(cj.at("m").get<double>(), cj.at("d").get<double>()));
        } else {
            ComponentModel c;
            c.A = matrix_from_json(cj.at("A"));
            c.L = matrix_from_json(cj.at("L"));
            c.B = matrix_from_json(cj.at("B"));
            c.C = matrix_from_json(cj.at("C"));
            file.network.components.push_back(std::move(c));
        }
    }
    std::vector<WeightedEdge> edges;
    for (const auto& ej : j.at("edges")) {
        edges.push_back({ej.at(0).get<int>() - 1, ej.at(1).get<int>() - 1,
                         ej.size() > 2 ? ej.at(2).get<double>() : 1.0});
    }
    const int dim = file.network.components.empty() ? 2 : file.network.components[0].state_dim();
    file.network.interconnection =
        diffusive_coupling(file.network.component_count(), edges, dim);
    if (j.contains("clusters")) file.clusters = clusters_from_json(j.at("clusters"));
    return file;
}

void save_network(const NetworkSystem& net, const std::optional<ClusterSet>& clusters,
                  const std::string& path) {
    json comps = json::array();
    for (const auto& c : net.components) {
        comps.push_back(json{{"A", matrix_to_json(c.A)},
                             {"L", matrix_to_json(c.L)},
                             {"B", matrix_to_json(c.B)},
                             {"C", matrix_to_json(c.C)}});
    }
    json edges = json::array();
    for (const auto& e : net.interconnection.edges) {
        edges.push_back(json::array({e.k + 1, e.l + 1, e.weight}));
    }
    json j{{"components", std::move(comps)}, {"edges", std::move(edges)}};
    if (clusters) j["clusters"] = clusters_to_json(*clusters);
    write_file(j, path);
}

ClusterSet load_clusters(const std::string& path) {
    const json j = load_file(path);
    return clusters_from_json(j.contains("clusters") ? j.at("clusters") : j);
}

void save_clusters(const ClusterSet& cs, const std::string& path) {
    write_file(json{{"clusters", clusters_to_json(cs)}}, path);
}

void save_trace(const ClusterSet& final, const PartitionTrace& trace, const std::string& path) {
    json steps = json::array();
    for (const auto& s : trace.steps) {
        steps.push_back(json{{"clusters", clusters_to_json(s.clusters)},
                             {"offending", s.offending + 1},
                             {"action", s.action}});
    }
    write_file(json{{"clusters", clusters_to_json(final)},
                    {"steps", std::move(steps)},
                    {"refinements", trace.refinements},
                    {"termination", trace.termination}},
               path);
}

namespace {

json hd_to_json(const HierarchicalDecomposition& hd) {
    json ai = json::array(), ri = json::array();
    for (const auto& M : hd.Ai) ai.push_back(matrix_to_json(M));
    for (const auto& M : hd.Ri) ri.push_back(matrix_to_json(M));
    return json{{"A0", matrix_to_json(hd.A0)},
                {"Ai", std::move(ai)},
                {"Ri", std::move(ri)},
                {"residuals", hd.residuals}};
}

HierarchicalDecomposition hd_from_json(const json& j) {
    HierarchicalDecomposition hd;
    hd.A0 = matrix_from_json(j.at("A0"));
    for (const auto& m : j.at("Ai")) hd.Ai.push_back(matrix_from_json(m));
    for (const auto& m : j.at("Ri")) hd.Ri.push_back(matrix_from_json(m));
    hd.residuals = j.at("residuals").get<std::vector<double>>();
    return hd;
}

}  // namespace

void save_decomposition(const HierarchicalDecomposition& hd, const std::string& path) {
    write_file(hd_to_json(hd), path);
}

void save_decomposition(const RobustDecomposition& rd, const std::string& path) {
    json j = hd_to_json(rd.hd);
    json fi = json::array();
    for (const auto& M : rd.Fi) fi.push_back(matrix_to_json(M));
    j["robust"] = json{{"Ae", matrix_to_json(rd.Ae)},
                       {"E0", matrix_to_json(rd.E0hat)},
                       {"F0", matrix_to_json(rd.F0)},
                       {"Fi", std::move(fi)},
                       {"Ei_zero", rd.Ei_zero},
                       {"leakage_F0", rd.leakage_F0},
                       {"leakage_Fi", rd.leakage_Fi}};
    write_file(j, path);
}

HierarchicalDecomposition load_decomposition(const std::string& path) {
    return hd_from_json(load_file(path));
}

RobustDecomposition load_robust_decomposition(const std::string& path) {
    const json j = load_file(path);
    RobustDecomposition rd;
    rd.hd = hd_from_json(j);
    const json& r = j.at("robust");
    rd.Ae = matrix_from_json(r.at("Ae"));
    rd.E0hat = matrix_from_json(r.at("E0"));
    rd.F0 = matrix_from_json(r.at("F0"));
    for (const auto& m : r.at("Fi")) rd.Fi.push_back(matrix_from_json(m));
    rd.Ei_zero = r.value("Ei_zero", true);
    rd.leakage_F0 = r.at("leakage_F0").get<double>();
    rd.leakage_Fi = r.at("leakage_Fi").get<std::vector<double>>();
    return rd;
}

void save_controllers(const GlocalController& ctrl, const std::string& path) {
    json j;
    j["global"] = ctrl.global ? controller_to_json(*ctrl.global) : json(nullptr);
    json locals = json::array(), obs = json::array();
    for (const auto& k : ctrl.local) locals.push_back(controller_to_json(k));
    for (const auto& o : ctrl.observers) obs.push_back(observer_to_json(o));
    j["local"] = std::move(locals);
    j["observers"] = std::move(obs);
    write_file(j, path);
}

GlocalController load_controllers(const std::string& path) {
    const json j = load_file(path);
    GlocalController ctrl;
    if (!j.at("global").is_null()) ctrl.global = controller_from_json(j.at("global"));
    for (const auto& k : j.at("local")) ctrl.local.push_back(controller_from_json(k));
    for (const auto& o : j.at("observers")) ctrl.observers.push_back(observer_from_json(o));
    return ctrl;
}

void save_existence_report(const ExistenceReport& report, const std::string& path) {
    json local = json::array(), reach = json::array();
    for (const auto& c : report.local) {
        local.push_back(json{{"holds", c.holds}, {"residual", c.residual}});
    }
    for (const auto& c : report.reachable) {
        reach.push_back(json{{"holds", c.holds}, {"residual", c.residual}});
    }
    write_file(json{{"local", std::move(local)},
                    {"global", json{{"holds", report.global.holds},
                                    {"residual", report.global.residual}}},
                    {"reachable", std::move(reach)},
                    {"single_cluster", report.single_cluster},
                    {"first_offending", report.first_offending + 1},
                    {"overall", report.overall}},
               path);
}

}  // namespace glocal::io
