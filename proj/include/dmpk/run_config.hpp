#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmpk/core_linalg.hpp"
#include "dmpk/micro_wire.hpp"

namespace dmpk::harness {

enum class ExperimentTag { Ohm, Ucf, Covariance, CompareB2, MicroScaling, HierarchyCheck };

std::string experiment_name(ExperimentTag tag);
ExperimentTag parse_experiment_name(const std::string& name);

/// Full description of one Monte Carlo campaign. Defaults reproduce the
/// shipped verification runs; a config file overrides field by field.
struct RunConfig {
    ExperimentTag experiment = ExperimentTag::Ohm;
    int beta = 2;
    std::vector<int> nLadder;   // channel counts (OHM uses several)
    std::vector<double> sGrid;  // macroscopic lengths, increasing
    double ds = 1e-3;
    bool expPolicy = true;      // exp step policy for matrix SDEs
    long nTrajectories = 0;
    std::uint64_t masterSeed = 0x5eed0001u;
    int threads = 1;
    std::optional<micro::WireGeometry> geometry;
    std::vector<double> lambdas; // disorder strengths (micro experiments)
    double hBase = 0.2;          // h(lambda) = hBase * sqrt(lambda) schedule
    std::string outputDir = "out";

    // Declared tolerances; every experiment writes these next to its verdicts.
    double ohmTolAtRef = 0.06;          // |E g/N - 1/(1+s)| at the reference point
    int ohmRefN = 16;
    double ohmRefS = 1.0;
    double ucfVarLow = 0.045;
    double ucfVarHigh = 0.09;
    double ucfRatioTol = 0.35;          // beta=1 vs 2*beta=2 variance ratio
    double ucfRefS = 3.0;
    double covVarRelTol = 0.10;         // entry variances vs prediction
    double covDiagCorrMin = 0.9;
    double covOffCorrMax = 0.1;
    double compareSigma = 3.0;          // combined-SE window for mean match
    double compareKsAlpha = 0.01;
    double hierarchySigma = 3.0;
    std::vector<int> hierarchyPs{1, 2};
    double hierarchyDeltaS = 0.05;
    double microMeanTol = 0.05;         // |E g_A - E g_limit| / N at smallest lambda

    void validate() const;
};

/// Built-in campaign matching the verification suite for each experiment.
RunConfig default_config(ExperimentTag tag);

/// Parse an INI-style config file (sections [experiment], [geometry], [sde],
/// [mc], [tolerances]); unknown sections or keys are errors.
RunConfig parse_config_file(const std::string& path);

} // namespace dmpk::harness
