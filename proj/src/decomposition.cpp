#include "glocal/decomposition.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "glocal/simulation.hpp"

namespace glocal {

double HierarchicalDecomposition::max_residual() const {
    double worst = 0.0;
    for (double r : residuals) worst = std::max(worst, r);
    return worst;
}

double RobustDecomposition::max_leakage() const {
    double worst = leakage_F0;
    for (double r : leakage_Fi) worst = std::max(worst, r);
    return worst;
}

namespace {

/// Least-squares blocks shared by the exact and robust constructions.
HierarchicalDecomposition least_squares_blocks(const ClusteredSystem& cs, bool retrofit_local) {
    const int N = cs.cluster_count();
    HierarchicalDecomposition hd;

    // A0 = P0^+ A P0 (P0 has full column rank)
    const Matrix P0tP0_inv = (cs.P0.transpose() * cs.P0).inverse();
    hd.A0 = P0tP0_inv * cs.P0.transpose() * (cs.A * cs.P0);

    hd.residuals.assign(N + 1, 0.0);
    for (int i = 0; i < N; ++i) {
        const Matrix API = cs.A * cs.P[i];
        const int ni = cs.cluster_state_dim(i);
        if (retrofit_local) {
            hd.Ai.push_back(cs.Ai[i]);
            const Matrix rhs = API - cs.P[i] * cs.Ai[i];
            hd.Ri.push_back(P0tP0_inv * cs.P0.transpose() * rhs);
        } else {
            Matrix stacked(cs.state_dim(), ni + cs.global_dim());
            stacked << cs.P[i], cs.P0;
            // minimum-norm least-squares split of A P_i across [P_i P_0]
            Matrix sol = stacked.completeOrthogonalDecomposition().solve(API);
            hd.Ai.push_back(sol.topRows(ni));
            hd.Ri.push_back(sol.bottomRows(cs.global_dim()));
        }
        hd.residuals[i] = (API - cs.P[i] * hd.Ai[i] - cs.P0 * hd.Ri[i]).norm();
    }
    hd.residuals[N] = (cs.A * cs.P0 - cs.P0 * hd.A0).norm();
    return hd;
}

}  // namespace

HierarchicalDecomposition decompose(const ClusteredSystem& cs, const DecomposeOptions& opts) {
    HierarchicalDecomposition hd = least_squares_blocks(cs, opts.retrofit_local);
    if (hd.max_residual() > opts.tol) {
        std::ostringstream msg;
        msg << "decompose: equation residuals exceed tol=" << opts.tol << " (";
        for (std::size_t i = 0; i < hd.residuals.size(); ++i) {
            msg << (i + 1 < hd.residuals.size() ? "cluster " + std::to_string(i + 1)
                                                : std::string("global"))
                << "=" << hd.residuals[i] << (i + 1 < hd.residuals.size() ? ", " : "");
        }
        msg << "); no exact hierarchical representation for these clusters";
        throw ExistenceViolation(msg.str(), hd.max_residual());
    }
    return hd;
}

RobustDecomposition robust_decompose(const ClusteredSystem& cs) {
    RobustDecomposition rd;
    rd.hd = least_squares_blocks(cs, /*retrofit_local=*/false);
    rd.E0hat = Matrix::Zero(cs.global_dim(), cs.state_dim());
    rd.Ae = cs.A;  // A - P0 E0hat - sum P_i Ei_hat with both choices zero
    rd.F0 = cs.A * cs.P0 - cs.P0 * rd.hd.A0;
    rd.leakage_F0 = rd.F0.norm();
    for (int i = 0; i < cs.cluster_count(); ++i) {
        rd.Fi.push_back(cs.A * cs.P[i] - cs.P[i] * rd.hd.Ai[i] - cs.P0 * rd.hd.Ri[i]);
        rd.leakage_Fi.push_back(rd.Fi.back().norm());
    }
    return rd;
}

namespace {

struct XiSystem {
    Matrix A;       // cascaded system matrix, states [xi_1..xi_N, xi_0 (, e)]
    Matrix B;       // inputs [u_1..u_N, u_0]
    int nloc = 0;
    int nglob = 0;
    bool with_error = false;
};

XiSystem build_xi(const ClusteredSystem& cs, const HierarchicalDecomposition& hd,
                  const RobustDecomposition* rd) {
    const int N = cs.cluster_count();
    XiSystem xs;
    xs.nglob = cs.global_dim();
    for (int i = 0; i < N; ++i) xs.nloc += cs.cluster_state_dim(i);
    xs.with_error = (rd != nullptr);
    const int n = xs.nloc + xs.nglob + (xs.with_error ? cs.state_dim() : 0);
    const int inputs = static_cast<int>(cs.E0.rows()) + N;  // sum r_i locals + N globals

    xs.A = Matrix::Zero(n, n);
    xs.B = Matrix::Zero(n, inputs);
    int off = 0, ucol = 0;
    for (int i = 0; i < N; ++i) {
        const int ni = cs.cluster_state_dim(i);
        xs.A.block(off, off, ni, ni) = hd.Ai[i];
        xs.A.block(xs.nloc, off, xs.nglob, ni) = hd.Ri[i];
        if (xs.with_error) {
            xs.A.block(xs.nloc + xs.nglob, off, cs.state_dim(), ni) = rd->Fi[i];
        }
        xs.B.block(off, ucol, ni, cs.r[i]) = cs.Bi[i];
        off += ni;
        ucol += cs.r[i];
    }
    xs.A.block(xs.nloc, xs.nloc, xs.nglob, xs.nglob) = hd.A0;
    xs.B.block(xs.nloc, ucol, xs.nglob, N) = cs.B0;
    if (xs.with_error) {
        xs.A.block(xs.nloc + xs.nglob, xs.nloc, cs.state_dim(), xs.nglob) = rd->F0;
        xs.A.block(xs.nloc + xs.nglob, xs.nloc + xs.nglob, cs.state_dim(), cs.state_dim()) = rd->Ae;
        // E0hat = Ei_hat = 0: no feedback from e into the cascade
    }
    return xs;
}

/// Piecewise-constant input held over `hold` seconds, components uniform [-1,1].
std::function<Vector(double)> random_input(int dims, double hold, std::uint64_t seed,
                                           double horizon) {
    const int segments = static_cast<int>(std::ceil(horizon / hold)) + 1;
    Matrix table(segments, dims);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int s = 0; s < segments; ++s) {
        for (int j = 0; j < dims; ++j) table(s, j) = unif(rng);
    }
    return [table, hold, segments](double t) {
        int s = std::min(static_cast<int>(t / hold), segments - 1);
        return Vector(table.row(s).transpose());
    };
}

double replay_error(const ClusteredSystem& cs, const HierarchicalDecomposition& hd,
                    const RobustDecomposition* rd, bool include_error_in_sum,
                    const SuperpositionSplit& split, const SuperpositionOptions& opts,
                    std::uint64_t input_seed, const std::optional<Vector>& x0_given) {
    const int N = cs.cluster_count();
    const int n = cs.state_dim();
    XiSystem xs = build_xi(cs, hd, rd);

    if (static_cast<int>(split.xi.size()) != N || split.xi0.size() != cs.global_dim()) {
        throw InvalidParameter("superposition_trial: split has wrong shape");
    }
    Vector e0 = split.e0.size() ? split.e0 : Vector::Zero(n);
    if (e0.size() != n) throw InvalidParameter("superposition_trial: e0 has wrong size");

    Vector x0 = cs.P0 * split.xi0;
    for (int i = 0; i < N; ++i) x0 += cs.P[i] * split.xi[i];
    if (rd != nullptr) x0 += e0;
    if (x0_given) {
        if ((x0 - *x0_given).norm() > 1e-9 * std::max(1.0, x0.norm())) {
            throw InvalidParameter(
                "superposition_trial: x0 is inconsistent with the initial split");
        }
        x0 = *x0_given;
    }

    const int inputs = static_cast<int>(cs.E0.rows()) + N;
    auto u = random_input(inputs, opts.input_hold, input_seed, opts.horizon);

    // original system: dx = A x + [diag(B_i) | P0 B0] u  (locals then the broadcast)
    Matrix Borig = Matrix::Zero(n, inputs);
    int off = 0, ucol = 0;
    for (int i = 0; i < N; ++i) {
        Borig.block(off, ucol, cs.cluster_state_dim(i), cs.r[i]) = cs.Bi[i];
        off += cs.cluster_state_dim(i);
        ucol += cs.r[i];
    }
    Borig.block(0, ucol, n, N) = cs.P0 * cs.B0;

    Vector z0(xs.A.rows());
    off = 0;
    for (int i = 0; i < N; ++i) {
        z0.segment(off, cs.cluster_state_dim(i)) = split.xi[i];
        off += cs.cluster_state_dim(i);
    }
    z0.segment(xs.nloc, xs.nglob) = split.xi0;
    if (xs.with_error) z0.tail(n) = e0;

    Trajectory orig = simulate(cs.A, Borig, u, x0, opts.horizon, opts.step);
    Trajectory casc = simulate(xs.A, xs.B, u, z0, opts.horizon, opts.step);

    double worst = 0.0;
    for (std::size_t k = 0; k < orig.times.size(); ++k) {
        Vector rebuilt = Vector::Zero(n);
        off = 0;
        for (int i = 0; i < N; ++i) {
            rebuilt += cs.P[i] * casc.states.row(k).segment(off, cs.cluster_state_dim(i)).transpose();
            off += cs.cluster_state_dim(i);
        }
        rebuilt += cs.P0 * casc.states.row(k).segment(xs.nloc, xs.nglob).transpose();
        if (include_error_in_sum) rebuilt += casc.states.row(k).tail(n).transpose();
        worst = std::max(worst, (orig.states.row(k).transpose() - rebuilt).norm());
    }
    return worst;
}

SuperpositionSplit random_split(const ClusteredSystem& cs, bool with_error, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    SuperpositionSplit split;
    for (int i = 0; i < cs.cluster_count(); ++i) {
        Vector v(cs.cluster_state_dim(i));
        for (int j = 0; j < v.size(); ++j) v(j) = gauss(rng);
        split.xi.push_back(std::move(v));
    }
    split.xi0.resize(cs.global_dim());
    for (int j = 0; j < split.xi0.size(); ++j) split.xi0(j) = gauss(rng);
    if (with_error) {
        split.e0 = Vector::Zero(cs.state_dim());
        for (int j = 0; j < split.e0.size(); ++j) split.e0(j) = gauss(rng);
    }
    return split;
}

}  // namespace

double superposition_trial(const ClusteredSystem& cs, const HierarchicalDecomposition& hd,
                           const SuperpositionSplit& split, const SuperpositionOptions& opts,
                           std::uint64_t input_seed, const std::optional<Vector>& x0) {
    return replay_error(cs, hd, nullptr, false, split, opts, input_seed, x0);
}

double superposition_trial(const ClusteredSystem& cs, const RobustDecomposition& rd,
                           const SuperpositionSplit& split, const SuperpositionOptions& opts,
                           std::uint64_t input_seed, const std::optional<Vector>& x0) {
    return replay_error(cs, rd.hd, &rd, true, split, opts, input_seed, x0);
}

double verify_superposition(const ClusteredSystem& cs, const HierarchicalDecomposition& hd,
                            const SuperpositionOptions& opts) {
    std::mt19937_64 rng(opts.seed);
    double worst = 0.0;
    for (int t = 0; t < opts.trials; ++t) {
        auto split = random_split(cs, false, rng);
        worst = std::max(worst, replay_error(cs, hd, nullptr, false, split, opts, rng(), {}));
    }
    return worst;
}

double verify_superposition(const ClusteredSystem& cs, const RobustDecomposition& rd,
                            const SuperpositionOptions& opts) {
    std::mt19937_64 rng(opts.seed);
    double worst = 0.0;
    for (int t = 0; t < opts.trials; ++t) {
        auto split = random_split(cs, true, rng);
        worst = std::max(worst, replay_error(cs, rd.hd, &rd, true, split, opts, rng(), {}));
    }
    return worst;
}

double plain_superposition_error(const ClusteredSystem& cs, const RobustDecomposition& rd,
                                 const SuperpositionOptions& opts) {
    std::mt19937_64 rng(opts.seed);
    double worst = 0.0;
    for (int t = 0; t < opts.trials; ++t) {
        auto split = random_split(cs, true, rng);
        split.e0.setZero();  // start consistent for the plain identity as well
        worst = std::max(worst, replay_error(cs, rd.hd, &rd, false, split, opts, rng(), {}));
    }
    return worst;
}

std::vector<std::pair<double, double>> error_gain_grid(const RobustDecomposition& rd,
                                                       double omega_min, double omega_max,
                                                       int points) {
    const int n = static_cast<int>(rd.Ae.rows());
    int cols = static_cast<int>(rd.F0.cols());
    for (const auto& F : rd.Fi) cols += static_cast<int>(F.cols());
    Matrix Fall(n, cols);
    Fall.leftCols(rd.F0.cols()) = rd.F0;
    int off = static_cast<int>(rd.F0.cols());
    for (const auto& F : rd.Fi) {
        Fall.middleCols(off, F.cols()) = F;
        off += static_cast<int>(F.cols());
    }

    std::vector<std::pair<double, double>> grid;
    grid.reserve(points);
    const double lmin = std::log10(omega_min), lmax = std::log10(omega_max);
    for (int k = 0; k < points; ++k) {
        const double w = std::pow(10.0, lmin + (lmax - lmin) * k / (points - 1));
        ComplexMatrix S = -rd.Ae.cast<std::complex<double>>();
        S.diagonal().array() += std::complex<double>(0.0, w);
        ComplexMatrix G = S.partialPivLu().solve(Fall.cast<std::complex<double>>());
        Eigen::BDCSVD<ComplexMatrix> svd(G);
        grid.emplace_back(w, svd.singularValues()(0));
    }
    return grid;
}

}  // namespace glocal
