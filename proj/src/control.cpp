#include "glocal/control.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "glocal/subspace.hpp"

namespace glocal {

namespace {
constexpr double kAxisTol = 1e-8;

double care_residual(const Matrix& A, const Matrix& G, const Matrix& Q, const Matrix& X) {
    return (A.transpose() * X + X * A - X * G * X + Q).norm();
}
}  // namespace

RiccatiSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
        R.rows() != B.cols() || R.cols() != B.cols()) {
        throw InvalidParameter("solve_care: dimension mismatch");
    }
    if ((Q - Q.transpose()).norm() > 1e-10 * (1.0 + Q.norm())) {
        throw InvalidParameter("solve_care: Q must be symmetric");
    }
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success) {
        throw InvalidParameter("solve_care: R must be symmetric positive definite");
    }
    const Matrix G = B * llt.solve(B.transpose());  // B R^-1 B^T

    Matrix H(2 * n, 2 * n);
    H << A, -G, -Q, -A.transpose();
    Eigen::EigenSolver<Matrix> es(H);
    if (es.info() != Eigen::Success) throw SynthesisError("solve_care: Hamiltonian eigensolve failed");

    std::vector<int> stable;
    for (int i = 0; i < 2 * n; ++i) {
        if (es.eigenvalues()(i).real() < -kAxisTol) stable.push_back(i);
    }
    if (static_cast<int>(stable.size()) != n) {
        std::ostringstream msg;
        msg << "solve_care: no stabilizing solution (found " << stable.size()
            << " strictly stable Hamiltonian eigenvalues, need " << n
            << "); the pair is likely unstabilizable or has undetectable imaginary-axis modes";
        throw SynthesisError(msg.str());
    }

    ComplexMatrix V(2 * n, n);
    for (int j = 0; j < n; ++j) V.col(j) = es.eigenvectors().col(stable[j]);
    ComplexMatrix V11 = V.topRows(n);
    ComplexMatrix V21 = V.bottomRows(n);
    Eigen::FullPivLU<ComplexMatrix> lu(V11);
    if (!lu.isInvertible()) {
        throw SynthesisError("solve_care: stable invariant subspace has no graph representation");
    }
    Matrix X = (V21 * lu.inverse()).real();
    X = 0.5 * (X + X.transpose());

    // Newton (Kleinman) refinement while it helps
    double res = care_residual(A, G, Q, X);
    for (int pass = 0; pass < 3 && res > 1e-14 * (1.0 + X.norm()); ++pass) {
        const Matrix K = llt.solve(B.transpose() * X);
        const Matrix F = A - B * K;
        if (spectral_abscissa(F) >= 0.0) break;
        Matrix Xn;
        try {
            Xn = lyapunov_solve(F.transpose(), Q + K.transpose() * R * K);
        } catch (const SynthesisError&) {
            break;
        }
        Xn = 0.5 * (Xn + Xn.transpose());
        const double rn = care_residual(A, G, Q, Xn);
        if (rn >= res) break;
        X = Xn;
        res = rn;
    }

    RiccatiSolution sol;
    sol.X = X;
    sol.residual = res;
    sol.closed_loop_abscissa = spectral_abscissa(A - G * X);
    Eigen::SelfAdjointEigenSolver<Matrix> sa(X);
    if (sa.eigenvalues().minCoeff() < -1e-8 * (1.0 + X.norm())) {
        throw SynthesisError("solve_care: solution is not positive semidefinite");
    }
    if (sol.residual > 1e-8 * (1.0 + X.norm())) {
        throw SynthesisError("solve_care: residual " + std::to_string(sol.residual) +
                             " above tolerance");
    }
    if (sol.closed_loop_abscissa >= 0.0) {
        throw SynthesisError("solve_care: closed loop not Hurwitz (abscissa " +
                             std::to_string(sol.closed_loop_abscissa) + ")");
    }
    return sol;
}

DynamicController lqr_observer_controller(const Matrix& A, const Matrix& B, const Matrix& C,
                                          const Matrix& Q, const Matrix& R, const Matrix& Qo,
                                          const Matrix& Ro) {
    const int n = static_cast<int>(A.rows());
    const auto lqr = solve_care(A, B, Q, R);
    Eigen::LLT<Matrix> lltR(R);
    const Matrix K = lltR.solve(B.transpose() * lqr.X);

    // Observable part of (A, C): the unobservable subspace is A-invariant and
    // may only carry semistable structural modes (angle translations).
    auto observable = controllable_subspace(A.transpose(), C.transpose(), kRankTol);
    const int q = observable.dim;
    Matrix H;
    int deflated = 0;
    Eigen::LLT<Matrix> lltRo(Ro);
    if (lltRo.info() != Eigen::Success) {
        throw InvalidParameter("lqr_observer_controller: Ro must be positive definite");
    }
    if (q == n) {
        const auto dual = solve_care(A.transpose(), C.transpose(), Qo, Ro);
        H = dual.X * C.transpose() * lltRo.solve(Matrix::Identity(C.rows(), C.rows()));
    } else {
        const Matrix Uo = observable.Q;
        Matrix Pperp = Matrix::Identity(n, n) - Uo * Uo.transpose();
        Matrix W = orthonormal_basis(Pperp, 1e-10).Q.leftCols(n - q);
        const Matrix Aw = W.transpose() * A * W;
        const double aw = spectral_abscissa(Aw);
        if (aw > kAxisTol) {
            throw SynthesisError(
                "lqr_observer_controller: undetectable unstable modes (unobservable abscissa " +
                std::to_string(aw) + ")");
        }
        const Matrix Ao = Uo.transpose() * A * Uo;
        const Matrix Co = C * Uo;
        const Matrix Qor = Uo.transpose() * Qo * Uo;
        const auto dual = solve_care(Ao.transpose(), Co.transpose(), Qor, Ro);
        const Matrix Ho = dual.X * Co.transpose() * lltRo.solve(Matrix::Identity(C.rows(), C.rows()));
        H = Uo * Ho;
        deflated = n - q;
    }

    DynamicController ctrl;
    ctrl.state_gain = K;
    ctrl.observer_gain = H;
    ctrl.A_K = A - B * K - H * C;
    ctrl.B_K = H;
    ctrl.C_K = -K;
    ctrl.deflated_observer_modes = deflated;

    // closed loop with the design plant: Hurwitz up to the tolerated
    // structural modes
    Matrix cl(2 * n, 2 * n);
    cl << A, B * ctrl.C_K, H * C, ctrl.A_K;
    const auto split = split_spectrum(eigenvalues(cl), 1e-7);
    if (split.unstable_count > 0 || split.boundary_count > deflated) {
        throw SynthesisError("lqr_observer_controller: design-plant closed loop is not Hurwitz");
    }
    return ctrl;
}

Matrix FunctionalObserver::state_matrix() const {
    const int m = half_dim();
    Matrix S = Matrix::Zero(2 * m, 2 * m);
    S.topLeftCorner(m, m) = Ahat;
    S.topRightCorner(m, m) = Asub - Ahat;
    S.bottomRightCorner(m, m) = Asub;
    return S;
}

Matrix FunctionalObserver::input_local() const {
    Matrix Bm = Matrix::Zero(state_dim(), B.cols());
    Bm.bottomRows(half_dim()) = B;
    return Bm;
}

Matrix FunctionalObserver::input_global() const {
    Matrix Bm(state_dim(), global_input.cols());
    Bm.topRows(half_dim()) = global_input;
    Bm.bottomRows(half_dim()) = global_input;
    return Bm;
}

Matrix FunctionalObserver::input_interaction() const {
    Matrix Bm(state_dim(), L.cols());
    Bm.topRows(half_dim()) = L;
    Bm.bottomRows(half_dim()) = L;
    return Bm;
}

Matrix FunctionalObserver::output_phi() const {
    Matrix O = Matrix::Zero(C.rows(), state_dim());
    O.leftCols(half_dim()) = -C;
    return O;
}

FunctionalObserver build_functional_observer(const ClusteredSystem& cs,
                                             const HierarchicalDecomposition& hd, int i) {
    if (i < 0 || i >= cs.cluster_count()) {
        throw InvalidParameter("build_functional_observer: bad cluster index");
    }
    const double a_sub = spectral_abscissa(cs.Ai[i]);
    const double a_hat = spectral_abscissa(hd.Ai[i]);
    if (a_sub > kAxisTol || a_hat > kAxisTol) {
        throw SynthesisError("build_functional_observer: cluster " + std::to_string(i + 1) +
                             " matrices are unstable (abscissas " + std::to_string(a_sub) + ", " +
                             std::to_string(a_hat) + "); observer convergence not guaranteed");
    }
    FunctionalObserver obs;
    obs.cluster = i;
    obs.Ahat = hd.Ai[i];
    obs.Asub = cs.Ai[i];
    obs.L = cs.Li[i];
    obs.B = cs.Bi[i];
    obs.C = cs.Ci[i];
    obs.global_input = cs.P[i].transpose() * cs.P0 * cs.B0;
    return obs;
}

double ObserverConditionResiduals::max() const {
    return std::max(dynamics, std::max(input, output));
}

namespace {

struct StackedBlocks {
    Matrix Ahat_d;   // diag(Ai_hat)
    Matrix Asub_d;   // diag(A_i)
    Matrix B_d;      // diag(B_i)
    Matrix C_d;      // diag(C_i)
    Matrix L_d;      // diag(L_i)
    Matrix R_row;    // [R1 ... RN]
    int n = 0;
    int outs = 0;
};

StackedBlocks stack_blocks(const ClusteredSystem& cs, const HierarchicalDecomposition& hd) {
    StackedBlocks s;
    s.n = cs.state_dim();
    int outs = 0, vcols = 0;
    for (int i = 0; i < cs.cluster_count(); ++i) {
        outs += static_cast<int>(cs.Ci[i].rows());
        vcols += static_cast<int>(cs.Li[i].cols());
    }
    s.outs = outs;
    s.Ahat_d = Matrix::Zero(s.n, s.n);
    s.Asub_d = Matrix::Zero(s.n, s.n);
    s.B_d = Matrix::Zero(s.n, outs);
    s.C_d = Matrix::Zero(outs, s.n);
    s.L_d = Matrix::Zero(s.n, vcols);
    s.R_row = Matrix::Zero(cs.global_dim(), s.n);
    int off = 0, r = 0, v = 0;
    for (int i = 0; i < cs.cluster_count(); ++i) {
        const int ni = cs.cluster_state_dim(i);
        s.Ahat_d.block(off, off, ni, ni) = hd.Ai[i];
        s.Asub_d.block(off, off, ni, ni) = cs.Ai[i];
        s.B_d.block(off, r, ni, cs.Bi[i].cols()) = cs.Bi[i];
        s.C_d.block(r, off, cs.Ci[i].rows(), ni) = cs.Ci[i];
        s.L_d.block(off, v, ni, cs.Li[i].cols()) = cs.Li[i];
        s.R_row.middleCols(off, ni) = hd.Ri[i];
        off += ni;
        r += static_cast<int>(cs.Ci[i].rows());
        v += static_cast<int>(cs.Li[i].cols());
    }
    return s;
}

ObserverConditionResiduals observer_conditions(const ClusteredSystem& cs,
                                               const HierarchicalDecomposition& hd,
                                               const RobustDecomposition* rd) {
    const auto s = stack_blocks(cs, hd);
    const int n = s.n;
    const int g = cs.global_dim();
    const bool robust = rd != nullptr;
    const int cols = n + g + (robust ? n : 0);

    // U maps lifted states [col(xi_i); xi_0 (; e)] to observer targets [phi; xhat]
    Matrix U = Matrix::Zero(2 * n, cols);
    U.block(0, n, n, g) = cs.P0;
    U.block(n, 0, n, n) = Matrix::Identity(n, n);
    U.block(n, n, n, g) = cs.P0;
    if (robust) {
        U.block(0, n + g, n, n) = Matrix::Identity(n, n);
        U.block(n, n + g, n, n) = Matrix::Identity(n, n);
    }

    Matrix Lambda = Matrix::Zero(cols, cols);
    Lambda.topLeftCorner(n, n) = s.Ahat_d;
    Lambda.block(n, 0, g, n) = s.R_row;
    Lambda.block(n, n, g, g) = hd.A0;
    if (robust) {
        Lambda.block(n, n + g, g, n) = rd->E0hat;
        int off = 0;
        for (int i = 0; i < cs.cluster_count(); ++i) {
            Lambda.block(n + g, off, n, cs.cluster_state_dim(i)) = rd->Fi[i];
            off += cs.cluster_state_dim(i);
        }
        Lambda.block(n + g, n, n, g) = rd->F0;
        Lambda.block(n + g, n + g, n, n) = rd->Ae;
    }

    Matrix Astack = Matrix::Zero(2 * n, 2 * n);
    Astack.topLeftCorner(n, n) = s.Ahat_d;
    Astack.topRightCorner(n, n) = s.Asub_d - s.Ahat_d;
    Astack.bottomRightCorner(n, n) = s.Asub_d;

    // measurements [y; v] as functions of the lifted state
    const int vrows = static_cast<int>(cs.M.rows());
    Matrix Cmap(s.outs + vrows, cols);
    Cmap.topLeftCorner(s.outs, n) = s.C_d;
    Cmap.block(0, n, s.outs, g) = s.C_d * cs.P0;
    Cmap.bottomLeftCorner(vrows, n) = cs.M;
    Cmap.block(s.outs, n, vrows, g) = cs.M * cs.P0;
    if (robust) {
        Cmap.block(0, n + g, s.outs, n) = s.C_d;
        Cmap.block(s.outs, n + g, vrows, n) = cs.M;
    }

    Matrix Emat = Matrix::Zero(2 * n, s.outs + vrows);
    Emat.block(0, s.outs, n, vrows) = s.L_d;
    Emat.block(n, s.outs, n, vrows) = s.L_d;

    ObserverConditionResiduals res;
    res.dynamics = (U * Lambda - Astack * U - Emat * Cmap).norm();

    Matrix Bstack = Matrix::Zero(2 * n, s.outs + cs.cluster_count());
    Bstack.block(0, s.outs, n, cs.cluster_count()) = cs.P0 * cs.B0;
    Bstack.block(n, 0, n, s.outs) = s.B_d;
    Bstack.block(n, s.outs, n, cs.cluster_count()) = cs.P0 * cs.B0;
    Matrix Bxi = Matrix::Zero(cols, s.outs + cs.cluster_count());
    Bxi.topLeftCorner(n, s.outs) = s.B_d;
    Bxi.block(n, s.outs, g, cs.cluster_count()) = cs.B0;
    res.input = (Bstack - U * Bxi).norm();

    Matrix Cpsi = Matrix::Zero(s.outs, 2 * n);
    Cpsi.leftCols(n) = -s.C_d;
    Matrix target = Matrix::Zero(s.outs, cols);
    target.leftCols(n) = s.C_d;
    Matrix ymap = Cmap.topRows(s.outs);
    res.output = (target - (Cpsi * U + ymap)).norm();
    return res;
}

}  // namespace

ObserverConditionResiduals verify_observer_conditions(const ClusteredSystem& cs,
                                                      const HierarchicalDecomposition& hd) {
    return observer_conditions(cs, hd, nullptr);
}

ObserverConditionResiduals verify_observer_conditions(const ClusteredSystem& cs,
                                                      const RobustDecomposition& rd) {
    return observer_conditions(cs, rd.hd, &rd);
}

Vector ClosedLoop::lift_plant_state(const Vector& plant_x0) const {
    if (plant_x0.size() != plant_dim) throw InvalidParameter("lift_plant_state: wrong size");
    Vector z = Vector::Zero(A.rows());
    z.head(plant_dim) = plant_x0;
    return z;
}

Trajectory ClosedLoop::response(const Vector& plant_x0, double horizon, double step) const {
    const Matrix no_input = Matrix::Zero(A.rows(), 1);
    auto zero = [](double) { return Vector::Zero(1); };
    Trajectory full = simulate(A, no_input, zero, lift_plant_state(plant_x0), horizon, step);

    Trajectory plant;
    plant.times = full.times;
    plant.states = full.states.leftCols(plant_dim);
    for (int k = 0; k < plant_dim / 2; ++k) {
        plant.labels.push_back("theta" + std::to_string(k + 1));
        plant.labels.push_back("omega" + std::to_string(k + 1));
    }
    for (int j = static_cast<int>(plant.labels.size()); j < plant_dim; ++j) {
        plant.labels.push_back("x" + std::to_string(j + 1));
    }
    return plant;
}

ClosedLoop assemble_glocal(const ClusteredSystem& cs, const GlocalController& ctrl) {
    const int N = cs.cluster_count();
    const int n = cs.state_dim();
    const bool with_local = !ctrl.local.empty();
    if (with_local && (static_cast<int>(ctrl.local.size()) != N ||
                       static_cast<int>(ctrl.observers.size()) != N)) {
        throw InvalidParameter("assemble_glocal: need one local controller and observer per cluster");
    }

    std::vector<std::pair<std::string, int>> blocks;
    int total = n;
    blocks.emplace_back("plant", 0);
    int g_off = -1;
    if (ctrl.global) {
        g_off = total;
        blocks.emplace_back("global_controller", total);
        total += ctrl.global->state_dim();
    }
    std::vector<int> obs_off(N, -1), z_off(N, -1);
    if (with_local) {
        for (int i = 0; i < N; ++i) {
            obs_off[i] = total;
            blocks.emplace_back("observer_" + std::to_string(i + 1), total);
            total += ctrl.observers[i].state_dim();
            z_off[i] = total;
            blocks.emplace_back("local_controller_" + std::to_string(i + 1), total);
            total += ctrl.local[i].state_dim();
        }
    }

    ClosedLoop loop;
    loop.A = Matrix::Zero(total, total);
    loop.plant_dim = n;
    loop.blocks = std::move(blocks);
    Matrix& Acl = loop.A;

    Acl.topLeftCorner(n, n) = cs.A;
    if (ctrl.global) {
        const auto& K0 = *ctrl.global;
        const Matrix y0_map = cs.C0 * cs.P0.transpose();
        Acl.block(0, g_off, n, K0.state_dim()) = cs.P0 * cs.B0 * K0.C_K;
        Acl.block(g_off, g_off, K0.state_dim(), K0.state_dim()) = K0.A_K;
        Acl.block(g_off, 0, K0.state_dim(), n) = K0.B_K * y0_map;
    }
    if (with_local) {
        for (int i = 0; i < N; ++i) {
            const auto& obs = ctrl.observers[i];
            const auto& Ki = ctrl.local[i];
            const int no = obs.state_dim();
            const int nz = Ki.state_dim();
            const Matrix yi_map = cs.Ci[i] * cs.P[i].transpose();

            Acl.block(obs_off[i], obs_off[i], no, no) = obs.state_matrix();
            Acl.block(obs_off[i], 0, no, n) = obs.input_interaction() * cs.Mi[i];
            Acl.block(obs_off[i], z_off[i], no, nz) = obs.input_local() * Ki.C_K;
            if (ctrl.global) {
                Acl.block(obs_off[i], g_off, no, ctrl.global->state_dim()) =
                    obs.input_global() * ctrl.global->C_K;
            }
            // z' = A_K z + B_K psi, psi = -C phi + y_i
            Acl.block(z_off[i], z_off[i], nz, nz) = Ki.A_K;
            Acl.block(z_off[i], obs_off[i], nz, no) = Ki.B_K * obs.output_phi();
            Acl.block(z_off[i], 0, nz, n) = Ki.B_K * yi_map;
            // plant input u_i
            Acl.block(0, z_off[i], n, nz) = cs.P[i] * cs.Bi[i] * Ki.C_K;
        }
    }
    return loop;
}

Matrix robust_global_loop(const ClusteredSystem& cs, const RobustDecomposition& rd,
                          const DynamicController& K0) {
    const int g = cs.global_dim();
    const int n = cs.state_dim();
    const int k = K0.state_dim();
    Matrix A = Matrix::Zero(g + n + k, g + n + k);
    A.topLeftCorner(g, g) = rd.hd.A0;
    A.block(0, g, g, n) = rd.E0hat;
    A.block(0, g + n, g, k) = cs.B0 * K0.C_K;
    A.block(g, 0, n, g) = rd.F0;
    A.block(g, g, n, n) = rd.Ae;
    A.block(g + n, 0, k, g) = K0.B_K * cs.C0;
    A.block(g + n, g, k, n) = K0.B_K * cs.C0 * cs.P0.transpose();
    A.block(g + n, g + n, k, k) = K0.A_K;
    return A;
}

SpectralSplit split_spectrum(const ComplexVector& eigs, double boundary_tol) {
    SpectralSplit split;
    split.stable_abscissa = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < eigs.size(); ++i) {
        const auto lambda = eigs(i);
        if (std::abs(lambda) <= boundary_tol) {
            split.boundary_count += 1;
            split.boundary_magnitude = std::max(split.boundary_magnitude, std::abs(lambda));
        } else if (lambda.real() > boundary_tol) {
            split.unstable_count += 1;
        } else {
            split.stable_abscissa = std::max(split.stable_abscissa, lambda.real());
        }
    }
    return split;
}

}  // namespace glocal
