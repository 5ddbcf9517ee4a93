#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "dmpk/experiments.hpp"

namespace {

int runOne(dmpk::harness::ExperimentTag tag, const std::string& configPath,
           const std::string& outDir, long seed, int threads, long trajectories) {
    using namespace dmpk::harness;
    RunConfig config = configPath.empty() ? default_config(tag) : parse_config_file(configPath);
    if (!configPath.empty() && config.experiment != tag)
        throw dmpk::UsageError("config file names experiment '" + experiment_name(config.experiment) +
                               "' but the '" + experiment_name(tag) + "' subcommand was invoked");
    config.experiment = tag;
    if (seed >= 0) config.masterSeed = static_cast<std::uint64_t>(seed);
    if (!outDir.empty()) config.outputDir = outDir;
    if (threads > 0) config.threads = threads;
    if (trajectories > 0) config.nTrajectories = trajectories;

    ExperimentResult result = run_experiment(config);
    for (const Check& c : result.checks)
        std::printf("[%s] %s = %s in [%s, %s]\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    format_double(c.value).c_str(), format_double(c.low).c_str(),
                    format_double(c.high).c_str());
    std::printf("%s: %s (%s, %s)\n", result.experiment.c_str(), result.pass ? "PASS" : "FAIL",
                result.csvPath.c_str(), result.jsonPath.c_str());
    return result.pass ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo experiments for the DMPK transfer-matrix theory of disordered wires"};
    app.require_subcommand(1);

    std::string configPath;
    std::string outDir;
    long seed = -1;
    int threads = 0;
    long trajectories = 0;
    app.add_option("--config", configPath, "INI config file")->check(CLI::ExistingFile);
    app.add_option("--out", outDir, "output directory for CSV/JSON reports");
    app.add_option("--seed", seed, "master seed override");
    app.add_option("--threads", threads, "worker thread count");
    app.add_option("--trajectories", trajectories, "trajectory count override");

    using dmpk::harness::ExperimentTag;
    struct Sub {
        const char* name;
        const char* help;
        ExperimentTag tag;
    };
    const Sub subs[] = {
        {"ohm", "E(g^p)/N^p against the Ohmic limit across an N ladder", ExperimentTag::Ohm},
        {"ucf", "Var(g) against the universal value in the diffusive window", ExperimentTag::Ucf},
        {"covariance", "microscopic Z covariances against the limiting law", ExperimentTag::Covariance},
        {"compare-b2", "transmission law of the limit ensemble vs the ideal TUE", ExperimentTag::CompareB2},
        {"micro-scaling", "A^lambda marginals against the limit SDE as lambda decreases", ExperimentTag::MicroScaling},
        {"hierarchy-check", "finite-N moment-hierarchy identity test", ExperimentTag::HierarchyCheck},
    };
    for (const Sub& s : subs) app.add_subcommand(s.name, s.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (const Sub& s : subs)
            if (app.get_subcommand(s.name)->parsed())
                return runOne(s.tag, configPath, outDir, seed, threads, trajectories);
        std::fprintf(stderr, "no experiment selected\n");
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
