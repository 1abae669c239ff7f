#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

#include "glocal/control.hpp"
#include "glocal/decomposition.hpp"
#include "glocal/simulation.hpp"
#include "helpers.hpp"

using namespace glocal;

TEST_CASE("solve_care on closed-form problems") {
    SUBCASE("integrator") {
        Matrix A{{0.0}}, B{{1.0}}, Q{{1.0}}, R{{1.0}};
        auto sol = solve_care(A, B, Q, R);
        CHECK(sol.X(0, 0) == doctest::Approx(1.0));
        CHECK(sol.closed_loop_abscissa == doctest::Approx(-1.0));
    }
    SUBCASE("unstable scalar") {
        Matrix A{{1.0}}, B{{1.0}}, Q{{0.0}}, R{{1.0}};
        auto sol = solve_care(A, B, Q, R);
        CHECK(sol.X(0, 0) == doctest::Approx(2.0));
        CHECK(sol.closed_loop_abscissa == doctest::Approx(-1.0));
    }
    SUBCASE("random stabilizable systems") {
        std::mt19937_64 rng(2);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int trial = 0; trial < 6; ++trial) {
            const int n = 6, m = 2;
            Matrix A(n, n), B(n, m), W(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    A(i, j) = gauss(rng);
                    W(i, j) = gauss(rng);
                }
                for (int j = 0; j < m; ++j) B(i, j) = gauss(rng);
            }
            Matrix Q = W * W.transpose() + 0.1 * Matrix::Identity(n, n);
            Matrix R = Matrix::Identity(m, m);
            auto sol = solve_care(A, B, Q, R);
            CHECK(sol.residual <= 1e-8 * (1.0 + sol.X.norm()));
            CHECK((sol.X - sol.X.transpose()).norm() <= 1e-10);
            CHECK(sol.closed_loop_abscissa < 0.0);
        }
    }
    SUBCASE("unstabilizable pair is rejected") {
        Matrix A{{1.0, 0.0}, {0.0, -1.0}};
        Matrix B{{0.0}, {1.0}};  // unstable mode untouched
        Matrix Q = Matrix::Identity(2, 2), R{{1.0}};
        CHECK_THROWS_AS(solve_care(A, B, Q, R), SynthesisError);
    }
}

namespace {

struct DesignedBenchmark {
    test::BenchmarkFixture fx;
    HierarchicalDecomposition hd;
    GlocalController ctrl;
};

GlocalController design(const ClusteredSystem& sys, const HierarchicalDecomposition& hd,
                        double q_theta = 1.0, double q_omega = 1e4, double r = 1e2,
                        double qo = 1e3) {
    GlocalController ctrl;
    auto weights = [&](int half, int inputs) {
        Matrix Q = Matrix::Zero(2 * half, 2 * half);
        for (int k = 0; k < half; ++k) {
            Q(2 * k, 2 * k) = q_theta;
            Q(2 * k + 1, 2 * k + 1) = q_omega;
        }
        return std::make_pair(Q, Matrix(r * Matrix::Identity(inputs, inputs)));
    };
    const int N = sys.cluster_count();
    auto [Q0, R0] = weights(N, N);
    ctrl.global = lqr_observer_controller(hd.A0, sys.B0, sys.C0, Q0, R0,
                                          qo * Matrix::Identity(2 * N, 2 * N), R0);
    for (int i = 0; i < N; ++i) {
        auto [Qi, Ri] = weights(sys.r[i], sys.r[i]);
        ctrl.local.push_back(lqr_observer_controller(
            hd.Ai[i], sys.Bi[i], sys.Ci[i], Qi, Ri,
            qo * Matrix::Identity(2 * sys.r[i], 2 * sys.r[i]), Ri));
        ctrl.observers.push_back(build_functional_observer(sys, hd, i));
    }
    return ctrl;
}

DesignedBenchmark designed_benchmark() {
    DesignedBenchmark db{test::make_benchmark(1), {}, {}};
    db.hd = decompose(db.fx.sys);
    db.ctrl = design(db.fx.sys, db.hd);
    return db;
}

}  // namespace

TEST_CASE("lqr_observer_controller with the nominal benchmark weights") {
    auto fx = test::make_benchmark(1);
    auto hd = decompose(fx.sys);

    SUBCASE("local loops are fully detectable and Hurwitz") {
        for (int i = 0; i < 3; ++i) {
            Matrix Q = Matrix::Zero(2 * fx.sys.r[i], 2 * fx.sys.r[i]);
            for (int k = 0; k < fx.sys.r[i]; ++k) {
                Q(2 * k, 2 * k) = 1.0;
                Q(2 * k + 1, 2 * k + 1) = 1e4;
            }
            Matrix R = 1e2 * Matrix::Identity(fx.sys.r[i], fx.sys.r[i]);
            auto ctrl = lqr_observer_controller(hd.Ai[i], fx.sys.Bi[i], fx.sys.Ci[i], Q, R,
                                                1e3 * Matrix::Identity(Q.rows(), Q.cols()), R);
            CHECK(ctrl.deflated_observer_modes == 0);
            Matrix cl(2 * Q.rows(), 2 * Q.cols());
            cl << hd.Ai[i], fx.sys.Bi[i] * ctrl.C_K, ctrl.B_K * fx.sys.Ci[i], ctrl.A_K;
            CHECK(spectral_abscissa(cl) < 0.0);
        }
    }
    SUBCASE("global loop carries exactly the translation mode") {
        Matrix Q0 = Matrix::Zero(6, 6);
        for (int k = 0; k < 3; ++k) {
            Q0(2 * k, 2 * k) = 1.0;
            Q0(2 * k + 1, 2 * k + 1) = 1e4;
        }
        Matrix R0 = 1e2 * Matrix::Identity(3, 3);
        auto ctrl = lqr_observer_controller(hd.A0, fx.sys.B0, fx.sys.C0, Q0, R0,
                                            1e3 * Matrix::Identity(6, 6), R0);
        CHECK(ctrl.deflated_observer_modes == 1);
        Matrix cl(12, 12);
        cl << hd.A0, fx.sys.B0 * ctrl.C_K, ctrl.B_K * fx.sys.C0, ctrl.A_K;
        auto split = split_spectrum(eigenvalues(cl));
        CHECK(split.boundary_count == 1);
        CHECK(split.unstable_count == 0);
        CHECK(split.stable_abscissa < 0.0);
    }
    SUBCASE("stable scalar plant") {
        Matrix A{{-1.0}}, B{{1.0}}, C{{1.0}};
        auto ctrl = lqr_observer_controller(A, B, C, Matrix{{1.0}}, Matrix{{1.0}},
                                            Matrix{{1.0}}, Matrix{{1.0}});
        Matrix cl(2, 2);
        cl << A, B * ctrl.C_K, ctrl.B_K * C, ctrl.A_K;
        CHECK(spectral_abscissa(cl) < 0.0);
    }
}

TEST_CASE("functional observer construction and convergence") {
    auto fx = test::make_benchmark(1);
    auto hd = decompose(fx.sys);

    SUBCASE("stability precondition is enforced") {
        HierarchicalDecomposition broken = hd;
        broken.Ai[0](1, 1) += 10.0;  // destabilize
        CHECK_THROWS_AS(build_functional_observer(fx.sys, broken, 0), SynthesisError);
    }

    // co-simulate plant + observer for cluster i under random inputs
    auto cosimulate = [&](const ClusteredSystem& sys, const HierarchicalDecomposition& dec, int i,
                          bool consistent_init, double horizon, double step) {
        auto obs = build_functional_observer(sys, dec, i);
        const int n = sys.state_dim();
        const int no = obs.state_dim();
        const int N = sys.cluster_count();

        // states: [x; phi; xhat], inputs: all local u_i plus global u_0
        const int inputs = static_cast<int>(sys.E0.rows()) + N;
        Matrix A = Matrix::Zero(n + no, n + no);
        Matrix B = Matrix::Zero(n + no, inputs);
        A.topLeftCorner(n, n) = sys.A;
        A.block(n, 0, no, n) = obs.input_interaction() * sys.Mi[i];
        A.block(n, n, no, no) = obs.state_matrix();
        int ucol = 0, off = 0;
        for (int j = 0; j < N; ++j) {
            B.block(off, ucol, sys.cluster_state_dim(j), sys.r[j]) = sys.Bi[j];
            if (j == i) B.block(n, ucol, no, sys.r[j]) = obs.input_local();
            off += sys.cluster_state_dim(j);
            ucol += sys.r[j];
        }
        B.block(0, ucol, n, N) = sys.P0 * sys.B0;
        B.block(n, ucol, no, N) = obs.input_global();

        std::mt19937_64 rng(19 + i);
        std::normal_distribution<double> gauss(0.0, 1.0);
        SuperpositionSplit split;
        for (int j = 0; j < N; ++j) {
            Vector v(sys.cluster_state_dim(j));
            for (int k = 0; k < v.size(); ++k) v(k) = gauss(rng);
            split.xi.push_back(v);
        }
        split.xi0.resize(sys.global_dim());
        for (int k = 0; k < split.xi0.size(); ++k) split.xi0(k) = gauss(rng);

        Vector x0 = sys.P0 * split.xi0;
        for (int j = 0; j < N; ++j) x0 += sys.P[j] * split.xi[j];

        Vector z0 = Vector::Zero(n + no);
        z0.head(n) = x0;
        if (consistent_init) {
            z0.segment(n, obs.half_dim()) =
                sys.P[i].transpose() * sys.P0 * split.xi0;           // phi
            z0.segment(n + obs.half_dim(), obs.half_dim()) =
                sys.P[i].transpose() * x0;                           // xhat
        }

        // the cascade reference: xi_i(t) from the decomposition
        Matrix Axi = dec.Ai[i];
        Matrix Bxi = Matrix::Zero(Axi.rows(), inputs);
        {
            int col = 0;
            for (int j = 0; j < i; ++j) col += sys.r[j];
            Bxi.middleCols(col, sys.r[i]) = sys.Bi[i];
        }
        Matrix Aall = Matrix::Zero(n + no + Axi.rows(), n + no + Axi.rows());
        Aall.topLeftCorner(n + no, n + no) = A;
        Aall.bottomRightCorner(Axi.rows(), Axi.cols()) = Axi;
        Matrix Ball(n + no + Axi.rows(), inputs);
        Ball << B, Bxi;
        Vector zall(n + no + Axi.rows());
        zall << z0, split.xi[i];

        std::mt19937_64 urng(91 + i);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        const int segments = static_cast<int>(horizon / 0.5) + 1;
        Matrix table(segments, inputs);
        for (int s = 0; s < segments; ++s)
            for (int j = 0; j < inputs; ++j) table(s, j) = unif(urng);
        auto u = [&table, segments](double t) {
            return Vector(table.row(std::min(static_cast<int>(t / 0.5), segments - 1)).transpose());
        };

        auto traj = simulate(Aall, Ball, u, zall, horizon, step);
        // psi - C xi_i over time
        Vector err(traj.states.rows());
        for (int k = 0; k < traj.states.rows(); ++k) {
            Vector phi = traj.states.row(k).segment(n, obs.half_dim()).transpose();
            Vector xi = traj.states.row(k).tail(Axi.rows()).transpose();
            Vector x = traj.states.row(k).head(n).transpose();
            Vector psi = -obs.C * phi + obs.C * (sys.P[i].transpose() * x);
            err(k) = (psi - obs.C * xi).norm();
        }
        return err;
    };

    SUBCASE("consistent initialization tracks exactly") {
        auto err = cosimulate(fx.sys, hd, 0, true, 5.0, 1e-3);
        CHECK(err.maxCoeff() <= 1e-8);
    }
    SUBCASE("zero-initialized observer converges exponentially") {
        auto err = cosimulate(fx.sys, hd, 1, false, 600.0, 2e-3);
        CHECK(err.tail(10).maxCoeff() <= 1e-4);  // slowest mode decays at ~1/60
        CHECK(err.tail(10).maxCoeff() < 1e-3 * err.maxCoeff());
    }
    SUBCASE("robust decomposition keeps the observer working") {
        auto pfx = test::make_benchmark(1, 0.2, 3);
        auto rd = robust_decompose(pfx.sys);
        auto err = cosimulate(pfx.sys, rd.hd, 2, false, 600.0, 2e-3);
        CHECK(err.tail(10).maxCoeff() <= 1e-3);
        CHECK(err.tail(10).maxCoeff() < 1e-2 * err.maxCoeff());
    }
}

TEST_CASE("observer matrix conditions") {
    auto fx = test::make_benchmark(1);
    auto hd = decompose(fx.sys);

    SUBCASE("exact decomposition satisfies the stacked identities") {
        auto res = verify_observer_conditions(fx.sys, hd);
        CHECK(res.dynamics <= 1e-10);
        CHECK(res.input <= 1e-10);
        CHECK(res.output <= 1e-10);
    }
    SUBCASE("robust variant satisfies the augmented identities") {
        auto pfx = test::make_benchmark(1, 0.2, 3);
        auto rd = robust_decompose(pfx.sys);
        auto res = verify_observer_conditions(pfx.sys, rd);
        CHECK(res.max() <= 1e-10);
    }
    SUBCASE("breaking the decomposition breaks the dynamics identity") {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> gauss(0.0, 1.0);
        HierarchicalDecomposition broken = hd;
        for (int r = 0; r < broken.Ai[0].rows(); ++r)
            for (int c = 0; c < broken.Ai[0].cols(); ++c) broken.Ai[0](r, c) += 1e-3 * gauss(rng);
        auto res = verify_observer_conditions(fx.sys, broken);
        CHECK(res.dynamics > 1e-6);
    }
}

TEST_CASE("assembled closed loops reproduce the expected spectra") {
    auto db = designed_benchmark();
    const auto& sys = db.fx.sys;
    const int structural = 1 + 3 + 2 + 4;  // plant translation + observer offsets

    SUBCASE("glocal loop: Hurwitz modulo the structural modes") {
        auto loop = assemble_glocal(sys, db.ctrl);
        auto split = split_spectrum(loop.spectrum());
        CHECK(split.boundary_count == structural);
        CHECK(split.unstable_count == 0);
        CHECK(split.stable_abscissa < -1e-3);
    }
    SUBCASE("local-only loop keeps the global modes") {
        GlocalController local_only;
        local_only.local = db.ctrl.local;
        local_only.observers = db.ctrl.observers;
        auto loop = assemble_glocal(sys, local_only);
        auto eigs = loop.spectrum();
        for (const auto lambda : eigenvalues(db.hd.A0)) {
            double dist = 1e100;
            for (int k = 0; k < eigs.size(); ++k) dist = std::min(dist, std::abs(eigs(k) - lambda));
            CHECK(dist <= 1e-6);
        }
    }
    SUBCASE("global-only loop keeps the genuine local modes") {
        GlocalController global_only;
        global_only.global = db.ctrl.global;
        auto loop = assemble_glocal(sys, global_only);
        auto eigs = loop.spectrum();
        for (int i = 0; i < 3; ++i) {
            Eigen::EigenSolver<Matrix> es(db.hd.Ai[i]);
            Matrix S = Matrix::Zero(2 * sys.r[i], 2);  // cluster-sync directions
            for (int j = 0; j < sys.r[i]; ++j) S.block(2 * j, 0, 2, 2) = Matrix::Identity(2, 2);
            S /= std::sqrt(static_cast<double>(sys.r[i]));
            for (int k = 0; k < es.eigenvalues().size(); ++k) {
                ComplexVector w = es.eigenvectors().col(k);
                ComplexVector perp = w - S.cast<std::complex<double>>() *
                                             (S.transpose().cast<std::complex<double>>() * w);
                if (perp.norm() <= 1e-6 * w.norm()) continue;  // lifting redundancy mode
                double dist = 1e100;
                for (int e = 0; e < eigs.size(); ++e)
                    dist = std::min(dist, std::abs(eigs(e) - es.eigenvalues()(k)));
                CHECK(dist <= 1e-6);
            }
        }
    }
    SUBCASE("star topology: no direct coupling between local subcontrollers") {
        auto loop = assemble_glocal(sys, db.ctrl);
        // block layout: plant, global, then (observer, controller) per cluster
        std::vector<std::pair<int, int>> locals;  // offset, size
        for (std::size_t b = 2; b < loop.blocks.size(); b += 2) {
            const int off = loop.blocks[b].second;
            const int end = (b + 2 < loop.blocks.size()) ? loop.blocks[b + 2].second
                                                         : static_cast<int>(loop.A.rows());
            locals.emplace_back(off, end - off);
        }
        REQUIRE(locals.size() == 3);
        for (std::size_t i = 0; i < locals.size(); ++i) {
            for (std::size_t j = 0; j < locals.size(); ++j) {
                if (i == j) continue;
                CHECK(loop.A.block(locals[i].first, locals[j].first, locals[i].second,
                                   locals[j].second)
                          .norm() == 0.0);
            }
        }
    }
    SUBCASE("observer separation: assembled spectrum lies in the lifted union") {
        auto loop = assemble_glocal(sys, db.ctrl);
        std::vector<std::complex<double>> pool;
        auto push_all = [&pool](const ComplexVector& v) {
            for (int k = 0; k < v.size(); ++k) pool.push_back(v(k));
        };
        // observer-error spectra
        for (int i = 0; i < 3; ++i) {
            push_all(eigenvalues(db.hd.Ai[i]));
            push_all(eigenvalues(sys.Ai[i]));
        }
        // lifted closed loops per subsystem
        auto closed = [&](const Matrix& A, const Matrix& B, const Matrix& C,
                          const DynamicController& K) {
            Matrix cl(A.rows() + K.state_dim(), A.rows() + K.state_dim());
            cl << A, B * K.C_K, K.B_K * C, K.A_K;
            return cl;
        };
        // the wired global measurement restricted to xi_0 is C0 P0^T P0
        push_all(eigenvalues(
            closed(db.hd.A0, sys.B0, sys.C0 * sys.P0.transpose() * sys.P0, *db.ctrl.global)));
        for (int i = 0; i < 3; ++i) {
            push_all(eigenvalues(closed(db.hd.Ai[i], sys.Bi[i], sys.Ci[i], db.ctrl.local[i])));
        }
        auto eigs = loop.spectrum();
        for (int k = 0; k < eigs.size(); ++k) {
            double dist = 1e100;
            for (const auto& mu : pool) dist = std::min(dist, std::abs(eigs(k) - mu));
            CHECK(dist <= 1e-6);
        }
    }
}

TEST_CASE("robust global loop verification") {
    auto pfx = test::make_benchmark(1, 0.2, 3);
    auto rd = robust_decompose(pfx.sys);
    auto ctrl = design(pfx.sys, rd.hd);
    REQUIRE(ctrl.global);
    auto split = split_spectrum(eigenvalues(robust_global_loop(pfx.sys, rd, *ctrl.global)));
    // both A0 and Ae carry a copy of the translation mode; everything else
    // must be damped for the augmented loop to certify
    CHECK(split.boundary_count == 2);
    CHECK(split.unstable_count == 0);
    CHECK(split.stable_abscissa < 0.0);
}
