#pragma once

#include <cstdint>
#include <vector>

#include "dmpk/core_linalg.hpp"
#include "dmpk/rng.hpp"

namespace dmpk::ideal {

enum class IncrementKind {
    IdealB1,
    IdealB2,
    LimitZGamma,
    LimitZ0,
    LimitYGamma,
    LimitY0,
};

/// One Ito increment dL of the driving matrix Brownian motion, in block form
/// [[a, b], [b*, a']]. The blocks satisfy a* = -a, a'* = -a' so that the
/// assembled increment obeys dL* Sigma_z + Sigma_z dL = 0 exactly.
struct NoiseIncrement {
    int n = 0;
    double ds = 0.0;
    MatrixXcd blockA;
    MatrixXcd blockB;
    MatrixXcd blockAprime;
    IncrementKind kind = IncrementKind::IdealB2;

    /// Assembled 2N x 2N Lie-algebra element.
    MatrixXcd assemble() const;
};

/// Draw an isotropic DMPK increment for beta in {1, 2}. Each underlying
/// Brownian increment is Normal(0, ds). beta=4 has no matrix ensemble.
NoiseIncrement sample_ideal_increment(const SymmetryClass& cls, int n, double ds, RngStream& rng);

enum class StepPolicy { Euler, Exp };

/// One step of the matrix SDE dM = dL M. Euler applies (1 + dL); Exp applies
/// expm(dL), which is exactly pseudo-unitary for Lie-algebra increments.
TransferMatrix group_step(const TransferMatrix& m, const NoiseIncrement& dl, StepPolicy policy);

/// expm for the small-norm increments of the SDE steps (scaling-and-squaring
/// with a Taylor core; relative error at machine precision for ||A|| <= 1).
MatrixXcd expm_small(const MatrixXcd& a);

struct MatrixSdePath {
    std::vector<double> s;
    std::vector<TransferMatrix> m;
};

/// Integrate dM = dL M from M(0) = 1 with fresh ideal increments, recording
/// the path on a uniform grid of gridPoints+1 values of s in [0, sMax].
MatrixSdePath integrate_matrix_sde(const SymmetryClass& cls, int n, double sMax, double ds,
                                   std::uint64_t seed, StepPolicy policy, int gridPoints = 16);

/// Transmission eigenvalues at macroscopic length s. Entries stay in
/// (0, 1], pairwise distinct for s > 0.
struct EigenvalueState {
    VectorXd t;
    double s = 0.0;
};

inline constexpr double kGapFloor = 1e-12;    // relative separation guard
inline constexpr double kClampFloor = 1e-300; // positivity floor
inline constexpr double kDegenerateStartDelta = 1e-8;

/// Start state T_k = 1 - k*delta, k = 1..N: the deterministic
/// de-degeneration of the T_k(0) = 1 initial condition.
EigenvalueState degenerate_start(int n, double delta = kDegenerateStartDelta);

/// Drift v_k and diffusion D_k of the DMPK eigenvalue SDE, all beta in
/// {1,2,4}. Requires pairwise-separated eigenvalues.
void eigenvalue_drift_diffusion(const EigenvalueState& state, const SymmetryClass& cls, int n,
                                VectorXd& v, VectorXd& d);

/// Euler-Maruyama step; the result is clamped to (kClampFloor, 1] and
/// re-separated to the gap floor.
EigenvalueState step_eigenvalue_sde(const EigenvalueState& state, const SymmetryClass& cls, int n,
                                    double ds, RngStream& rng);

/// Closed form of sum_k v_k: -gamma_N(beta) (g^2 - (1 - 2/beta) g^(2)).
double drift_sum(const EigenvalueState& state, const SymmetryClass& cls, int n);

/// Integrate the eigenvalue SDE, invoking observer(gridIndex, state) at each
/// of the gridPoints+1 uniform grid values of s in [0, sMax] (including 0).
template <typename Observer>
void integrate_eigenvalue_sde(const SymmetryClass& cls, int n, double sMax, double ds,
                              RngStream& rng, int gridPoints, Observer&& observer,
                              double startDelta = kDegenerateStartDelta) {
    if (sMax < 0.0) throw ContractError("integrate_eigenvalue_sde: sMax must be >= 0");
    if (ds <= 0.0 || (sMax > 0.0 && ds >= sMax))
        throw ContractError("integrate_eigenvalue_sde: need 0 < ds < sMax");
    EigenvalueState state = degenerate_start(n, startDelta);
    observer(0, state);
    if (gridPoints < 1) return;
    const double segment = sMax / gridPoints;
    for (int gp = 1; gp <= gridPoints; ++gp) {
        const long steps = std::max(1L, std::lround(segment / ds));
        const double h = segment / static_cast<double>(steps);
        for (long i = 0; i < steps; ++i) state = step_eigenvalue_sde(state, cls, n, h, rng);
        state.s = gp * segment;
        observer(gp, state);
    }
}

} // namespace dmpk::ideal
