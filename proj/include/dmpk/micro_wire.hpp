#pragma once

#include <cstdint>
#include <vector>

#include "dmpk/core_linalg.hpp"
#include "dmpk/rng.hpp"

namespace dmpk::micro {

/// Microscopic parameters of the Anderson strip. Channels are residues
/// nu = 0..N-1 mod N; -nu means N-nu mod N.
struct WireGeometry {
    int n = 2;          ///< channel count N
    double gamma = 0.0; ///< magnetic phase, 0 <= gamma < pi/N
    double h1 = 0.1;    ///< transverse hopping
    double h2 = 0.1;    ///< diagonal hopping
    double energy = 1.0;

    void validate() const;
};

inline constexpr double kMinHopping = 1e-6;
inline constexpr double kMinVelocity = 1e-8;

/// Wavevectors and group velocities per channel, plus the chaoticity of the
/// kinetic Hamiltonian. k^+ carries positive velocity (right mover),
/// k^- negative, by convention.
struct DispersionData {
    VectorXd kPlus, kMinus;
    VectorXd vPlus, vMinus;
    double cha = std::numeric_limits<double>::quiet_NaN();
};

/// Solve E = 2 cos k + 2 h1 cos(theta_nu) + 2 h2 cos(k - theta_nu) for every
/// channel; computeChaoticity also fills the (4N)^4 enumeration result.
DispersionData solve_dispersion(const WireGeometry& geom, bool computeChaoticity = true);

/// Minimal |sum_i w_i k^{sigma_i}_{nu_i}| mod 2pi over all sign/branch/channel
/// quadruples, excluding the symmetry-forced cancellations; +infinity when the
/// exclusion removes every quadruple.
double chaoticity(const WireGeometry& geom);

enum class DisorderDistribution { Gaussian, Rademacher, Uniform };

/// One layer of on-site potentials, i.i.d., mean 0, variance 1.
struct LayerDisorder {
    VectorXd v;
    DisorderDistribution distribution = DisorderDistribution::Gaussian;
};

LayerDisorder sample_layer_disorder(int n, DisorderDistribution dist, RngStream& rng);

/// Precomputed basis data for a fixed geometry: transverse Fourier matrix Q,
/// channel permutation Pi, velocity weights, the change of basis K and the
/// clean one-layer phases M0.
class WireModel {
public:
    explicit WireModel(const WireGeometry& geom, bool computeChaoticity = false);

    const WireGeometry& geometry() const { return geom_; }
    const DispersionData& dispersion() const { return disp_; }

    const MatrixXcd& channelBasis() const { return k_; }  ///< K = diag(Q,Q) Upsilon
    const MatrixXcd& cleanLayer() const { return m0_; }   ///< M0, diagonal phases
    /// Diagonal of M0: slot m < N carries k^+_m, slot N+m carries k^-_{-m}.
    const VectorXd& slotWavevectors() const { return slotK_; }
    /// |v^+| weight of each of the 2N slots (physical channel sigma*nu).
    const VectorXd& slotWeights() const { return slotW_; }

    /// Position-basis one-layer transfer matrix T_x^lambda.
    MatrixXcd positionLayer(const LayerDisorder& disorder, double lambda) const;

    /// Channel-basis layer M_x^lambda = K^{-1} T_x^lambda K.
    TransferMatrix layer(const LayerDisorder& disorder, double lambda) const;

    /// R_x of the rescaled recursion, exact in the disorder:
    /// lambda R_x = K^{-1} (T^lambda - T^0) K (M0)^{-1}.
    MatrixXcd buildR(const LayerDisorder& disorder) const;

    /// I + lambda Z_x with Z_x = M0(x)^{-1} R_x M0(x); slotPhases holds the
    /// accumulated x*k_m values (mod 2pi) of M0(x).
    MatrixXcd rescaledLayer(const LayerDisorder& disorder, double lambda,
                            const VectorXd& slotPhases) const;

private:
    WireGeometry geom_;
    DispersionData disp_;
    MatrixXcd q_;   // transverse Fourier matrix
    Eigen::VectorXi piPerm_; // nu -> -nu permutation
    MatrixXcd k_;
    Eigen::PartialPivLU<MatrixXcd> kLu_;
    MatrixXcd m0_;
    VectorXd slotK_;
    VectorXd slotW_;
    MatrixXcd p_, pStar_;
    Eigen::PartialPivLU<MatrixXcd> pStarLu_;
    MatrixXcd hPerp_;
};

TransferMatrix layer_transfer(const WireGeometry& geom, const LayerDisorder& disorder, double lambda);
MatrixXcd build_R(const WireGeometry& geom, const LayerDisorder& disorder);

inline constexpr double kMaxMicroLayers = 1e8;

struct MicroPath {
    std::vector<double> s;
    std::vector<FactoredTransfer> a;
};

/// Iterate A <- (1 + lambda Z_x) A over floor(lambda^{-2} sMax) disordered
/// layers, recording the stabilized product on a uniform macroscopic grid.
MicroPath evolve_A(const WireGeometry& geom, double lambda, double sMax, std::uint64_t seed,
                   int gridPoints = 64,
                   DisorderDistribution dist = DisorderDistribution::Gaussian,
                   double maxLayers = kMaxMicroLayers);

/// Z^lambda(s) = lambda * sum_x M0(x)^{-1} R_x M0(x) for one realization.
MatrixXcd accumulate_Z(const WireGeometry& geom, double lambda, double s, std::uint64_t seed,
                       DisorderDistribution dist = DisorderDistribution::Gaussian,
                       double maxLayers = kMaxMicroLayers);

/// Entry pairs of Z whose correlation survives the phase averaging:
/// two diagonal entries, mutually transposed entries, and (gamma=0 only)
/// equal positions in opposite blocks. Indices are 0-based in [0, 2N).
bool exceptional_entry_pair(int rowA, int colA, int rowB, int colB, int n, bool timeReversal);

} // namespace dmpk::micro
