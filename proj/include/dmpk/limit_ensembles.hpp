#pragma once

#include <cstdint>
#include <optional>

#include "dmpk/ideal_dmpk.hpp"
#include "dmpk/micro_wire.hpp"

namespace dmpk::limits {

using ideal::IncrementKind;
using ideal::MatrixSdePath;
using ideal::NoiseIncrement;
using ideal::StepPolicy;

/// Scaling limits of the microscopic wire: Z kinds carry the common
/// 1/sqrt((4-E^2) N) weight (or 1/sqrt(N) in unit-normalized mode, which
/// absorbs the mean-free-path redefinition); Y kinds weight each entry by
/// 1/sqrt(N |v+_a v+_b|) from the dispersion data. The a-diagonals of all
/// kinds share a single Brownian driver.
struct LimitEnsembleParams {
    IncrementKind kind = IncrementKind::LimitZGamma;
    int n = 2;
    double energy = 1.0;
    bool unitNormalized = false;
    std::optional<micro::DispersionData> velocities; ///< required for Y kinds
};

NoiseIncrement sample_limit_increment(const LimitEnsembleParams& params, double ds, RngStream& rng);

/// Integrate dA = dZ A (or dG = dY G) from the identity, same contract as
/// ideal::integrate_matrix_sde.
MatrixSdePath integrate_limit_sde(const LimitEnsembleParams& params, double sMax, double ds,
                                  std::uint64_t seed, StepPolicy policy, int gridPoints = 16);

/// Entrywise weight matrix of the increment covariance: weight(a,b) is the
/// standard deviation scale of entry (a,b) per unit ds, over the 2N slots.
Eigen::MatrixXd increment_weights(const LimitEnsembleParams& params);

} // namespace dmpk::limits
