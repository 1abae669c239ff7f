#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "glocal/common.hpp"
#include "glocal/network.hpp"

namespace glocal {

/// Exact cascaded surrogate: local blocks xi_i' = Ai_hat xi_i + B_i u_i feeding
/// the global block xi_0' = A0_hat xi_0 + sum R_i xi_i + B_0 u_0, with
/// A P_i = P_i Ai_hat + P_0 Ri_hat and A P_0 = P_0 A0_hat.
struct HierarchicalDecomposition {
    Matrix A0;                     // global block
    std::vector<Matrix> Ai;        // per-cluster blocks
    std::vector<Matrix> Ri;        // couplings into the global block
    std::vector<double> residuals;  // per-cluster equation norms, then the global one

    double max_residual() const;
};

/// The always-existing variant with explicit error state e:
///   xi_i' = Ai xi_i + B_i u_i           (Ei_hat = 0, cascade preserved)
///   xi_0' = A0 xi_0 + sum R_i xi_i + E0_hat e + B_0 u_0
///   e'    = Ae e + F0 xi_0 + sum F_i xi_i
struct RobustDecomposition {
    HierarchicalDecomposition hd;  // least-squares A0/Ai/Ri with their residuals
    Matrix Ae;
    Matrix E0hat;                  // chosen zero; kept for the bookkeeping identity
    Matrix F0;
    std::vector<Matrix> Fi;
    bool Ei_zero = true;           // enforced identically
    double leakage_F0 = 0.0;       // ||F0||_F
    std::vector<double> leakage_Fi;

    double max_leakage() const;
};

struct DecomposeOptions {
    double tol = 1e-8;
    /// Retrofit parameterization: fix Ai_hat = A_i (cluster-diagonal block) and
    /// solve only for Ri_hat.  Default is the minimum-norm pseudoinverse
    /// solution for the pair (Ai_hat, Ri_hat).
    bool retrofit_local = false;
};

/// Solves the defining linear matrix equations; throws ExistenceViolation
/// (carrying the worst residual) when any equation residual exceeds tol.
HierarchicalDecomposition decompose(const ClusteredSystem& cs, const DecomposeOptions& opts = {});

/// Frobenius-optimal free parameters, Ei_hat = 0, E0_hat = 0 (hence Ae = A).
/// Always succeeds.
RobustDecomposition robust_decompose(const ClusteredSystem& cs);

struct SuperpositionOptions {
    double horizon = 10.0;
    double step = 1e-3;
    int trials = 20;
    std::uint64_t seed = 0;
    double input_hold = 0.5;  // switching interval of the random piecewise-constant inputs
};

/// One replay with explicit initial split.  When x0 is given it must satisfy
/// x0 = sum P_i xi_i(0) + P_0 xi_0(0) [+ e(0)]; otherwise InvalidParameter.
struct SuperpositionSplit {
    std::vector<Vector> xi;  // per-cluster initial states
    Vector xi0;              // global initial state
    Vector e0;               // used in the robust replay (empty means zero)
};

double superposition_trial(const ClusteredSystem& cs, const HierarchicalDecomposition& hd,
                           const SuperpositionSplit& split, const SuperpositionOptions& opts,
                           std::uint64_t input_seed, const std::optional<Vector>& x0 = {});

double superposition_trial(const ClusteredSystem& cs, const RobustDecomposition& rd,
                           const SuperpositionSplit& split, const SuperpositionOptions& opts,
                           std::uint64_t input_seed, const std::optional<Vector>& x0 = {});

/// Max over `trials` randomized runs of max_t || x(t) - sum P_i xi_i(t) - P_0 xi_0(t) ||.
double verify_superposition(const ClusteredSystem& cs, const HierarchicalDecomposition& hd,
                            const SuperpositionOptions& opts = {});

/// Same with the augmented identity (error state e included in the sum).
double verify_superposition(const ClusteredSystem& cs, const RobustDecomposition& rd,
                            const SuperpositionOptions& opts = {});

/// Plain (no-e) replay error of the robust decomposition, for contrast.
double plain_superposition_error(const ClusteredSystem& cs, const RobustDecomposition& rd,
                                 const SuperpositionOptions& opts = {});

/// sigma_max((jw I - Ae)^-1 [F0 F1 ... FN]) over a log grid of frequencies.
std::vector<std::pair<double, double>> error_gain_grid(const RobustDecomposition& rd,
                                                       double omega_min = 1e-2,
                                                       double omega_max = 1e2, int points = 200);

}  // namespace glocal
