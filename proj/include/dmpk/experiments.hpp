#pragma once

#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "dmpk/ideal_dmpk.hpp"
#include "dmpk/limit_ensembles.hpp"
#include "dmpk/moment_hierarchy.hpp"
#include "dmpk/run_config.hpp"
#include "dmpk/stats.hpp"

namespace dmpk::harness {

using Json = nlohmann::ordered_json;

/// One line of the output table: observable,s,N,beta,kind,mean,stderr,var,
/// var_stderr,nsamples,seed.
struct CsvRow {
    std::string observable;
    double s = 0.0;
    int n = 0;
    int beta = 0;
    std::string kind;
    double mean = 0.0;
    double meanStdErr = 0.0;
    double var = 0.0;
    double varStdErr = 0.0;
    long nsamples = 0;
    std::uint64_t seed = 0;
};

/// One declared pass/fail check: `value` must lie in [low, high].
struct Check {
    std::string name;
    double value = 0.0;
    double low = 0.0;
    double high = 0.0;
    bool pass = false;
};

struct ExperimentResult {
    std::string experiment;
    bool pass = true;
    std::vector<CsvRow> rows;
    std::vector<Check> checks;
    Json summary;
    std::string csvPath;
    std::string jsonPath;
};

/// Static chunking of [0, count) over worker threads. Work units own
/// disjoint output slots, so results are identical for any thread count.
void parallel_for(long count, int threads, const std::function<void(long)>& fn);

/// %.17g, the serialization format of every float in the reports.
std::string format_double(double v);
std::string csv_text(const std::vector<CsvRow>& rows);
std::string json_text(const Json& j);

/// Two-sample Kolmogorov-Smirnov statistic and its large-sample critical value.
double ks_statistic(std::vector<double> a, std::vector<double> b);
double ks_critical(double alpha, std::size_t nA, std::size_t nB);

/// Eigenvalue-SDE trajectory ensemble: `record(traj, gridIndex, state)` is
/// called at every requested s (strictly increasing, positive).
void run_eigenvalue_ensemble(const SymmetryClass& cls, int n, const std::vector<double>& sGrid,
                             double ds, long nTraj, std::uint64_t seed, int threads,
                             const std::function<void(long, int, const ideal::EigenvalueState&)>& record);

/// Matrix-SDE ensemble (ideal or limiting law), same recording contract.
struct MatrixEnsembleSpec {
    bool ideal = true;
    int beta = 2;
    limits::LimitEnsembleParams limit;
};

void run_matrix_ensemble(const MatrixEnsembleSpec& spec, int n, const std::vector<double>& sGrid,
                         double ds, ideal::StepPolicy policy, long nTraj, std::uint64_t seed,
                         int threads,
                         const std::function<void(long, int, const TransferMatrix&)>& record);

ExperimentResult run_ohm(const RunConfig& config);
ExperimentResult run_ucf(const RunConfig& config);
ExperimentResult run_covariance(const RunConfig& config);
ExperimentResult run_compare_b2(const RunConfig& config);
ExperimentResult run_micro_scaling(const RunConfig& config);
ExperimentResult run_hierarchy_check(const RunConfig& config);

/// Dispatch on config.experiment; optionally write <name>.csv and
/// <name>.json under config.outputDir.
ExperimentResult run_experiment(const RunConfig& config, bool writeFiles = true);

} // namespace dmpk::harness
