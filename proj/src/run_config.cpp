#include "dmpk/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dmpk::harness {

std::string experiment_name(ExperimentTag tag) {
    switch (tag) {
        case ExperimentTag::Ohm: return "ohm";
        case ExperimentTag::Ucf: return "ucf";
        case ExperimentTag::Covariance: return "covariance";
        case ExperimentTag::CompareB2: return "compare_b2";
        case ExperimentTag::MicroScaling: return "micro_scaling";
        case ExperimentTag::HierarchyCheck: return "hierarchy_check";
    }
    throw UsageError("unknown experiment tag");
}

ExperimentTag parse_experiment_name(const std::string& raw) {
    std::string name = raw;
    std::replace(name.begin(), name.end(), '-', '_');
    if (name == "ohm") return ExperimentTag::Ohm;
    if (name == "ucf") return ExperimentTag::Ucf;
    if (name == "covariance") return ExperimentTag::Covariance;
    if (name == "compare_b2") return ExperimentTag::CompareB2;
    if (name == "micro_scaling") return ExperimentTag::MicroScaling;
    if (name == "hierarchy_check") return ExperimentTag::HierarchyCheck;
    throw UsageError("unknown experiment '" + raw +
                     "' (expected ohm, ucf, covariance, compare_b2, micro_scaling, hierarchy_check)");
}

namespace {

micro::WireGeometry covarianceGeometry(double lambda, double hBase) {
    micro::WireGeometry g;
    g.n = 2;
    g.energy = 1.0;
    g.gamma = M_PI / 8.0;
    g.h1 = g.h2 = hBase * std::sqrt(lambda);
    return g;
}

} // namespace

RunConfig default_config(ExperimentTag tag) {
    RunConfig c;
    c.experiment = tag;
    switch (tag) {
        case ExperimentTag::Ohm:
            c.beta = 2;
            c.nLadder = {4, 8, 16, 32};
            c.sGrid = {0.5, 1.0, 2.0};
            c.nTrajectories = 20000;
            break;
        case ExperimentTag::Ucf:
            c.nLadder = {32};
            c.sGrid = {2.0, 3.0, 4.0};
            c.nTrajectories = 40000;
            break;
        case ExperimentTag::Covariance:
            c.lambdas = {0.02};
            c.sGrid = {1.0};
            c.nTrajectories = 10000;
            c.geometry = covarianceGeometry(0.02, c.hBase);
            break;
        case ExperimentTag::CompareB2:
            c.nLadder = {4};
            c.sGrid = {0.5, 1.0};
            c.nTrajectories = 20000;
            break;
        case ExperimentTag::MicroScaling:
            c.lambdas = {0.1, 0.05, 0.025};
            c.sGrid = {0.5, 1.0};
            c.nTrajectories = 1500;
            c.geometry = covarianceGeometry(0.1, c.hBase);
            break;
        case ExperimentTag::HierarchyCheck:
            c.nLadder = {4};
            c.sGrid = {0.5};
            c.nTrajectories = 40000;
            break;
    }
    return c;
}

void RunConfig::validate() const {
    if (beta != 1 && beta != 2 && beta != 4)
        throw UsageError("config: beta must be 1, 2 or 4");
    if (nTrajectories < 2) throw UsageError("config: trajectories must be >= 2");
    if (threads < 1) throw UsageError("config: threads must be >= 1");
    if (!(ds > 0.0) || ds > 1e-2) throw UsageError("config: ds must lie in (0, 1e-2]");
    if (sGrid.empty()) throw UsageError("config: s_grid must not be empty");
    for (std::size_t i = 0; i < sGrid.size(); ++i) {
        if (!(sGrid[i] > 0.0)) throw UsageError("config: s_grid entries must be positive");
        if (i > 0 && sGrid[i] <= sGrid[i - 1])
            throw UsageError("config: s_grid must be strictly increasing");
    }
    const bool micro = experiment == ExperimentTag::Covariance ||
                       experiment == ExperimentTag::MicroScaling;
    if (micro) {
        if (!geometry) throw UsageError("config: [geometry] section required for " +
                                        experiment_name(experiment));
        geometry->validate();
        if (lambdas.empty())
            throw UsageError("config: lambda_ladder required for " + experiment_name(experiment));
        for (double l : lambdas)
            if (!(l > 0.0) || l > 0.5)
                throw UsageError("config: lambda values must lie in (0, 0.5]");
    } else {
        if (nLadder.empty()) throw UsageError("config: n_ladder must not be empty");
        for (int n : nLadder)
            if (n < 1) throw UsageError("config: n_ladder entries must be >= 1");
    }
    if (experiment == ExperimentTag::MicroScaling && lambdas.size() < 2)
        throw UsageError("config: micro_scaling needs at least two lambda values");
    if (experiment == ExperimentTag::HierarchyCheck) {
        if (hierarchyPs.empty()) throw UsageError("config: hierarchy_ps must not be empty");
        if (!(hierarchyDeltaS > 0.0) || hierarchyDeltaS >= sGrid.front())
            throw UsageError("config: hierarchy_delta_s must lie in (0, s)");
    }
}

namespace {

using Section = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> splitList(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

double toDouble(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw UsageError("config: key '" + key + "' has non-numeric value '" + v + "'");
    }
}

long toLong(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw UsageError("config: key '" + key + "' has non-integer value '" + v + "'");
    }
}

const std::map<std::string, std::set<std::string>> kAllowedKeys = {
    {"experiment", {"name", "beta", "n_ladder", "s_grid", "lambda_ladder", "h_base", "out_dir"}},
    {"geometry", {"n", "gamma", "h1", "h2", "energy"}},
    {"sde", {"ds", "policy"}},
    {"mc", {"trajectories", "master_seed", "threads"}},
    {"tolerances",
     {"ohm_ref_tol", "ohm_ref_n", "ohm_ref_s", "ucf_var_low", "ucf_var_high", "ucf_ratio_tol",
      "ucf_ref_s", "cov_var_rel_tol", "cov_diag_corr_min", "cov_off_corr_max", "compare_sigma",
      "compare_ks_alpha", "hierarchy_sigma", "hierarchy_ps", "hierarchy_delta_s",
      "micro_mean_tol"}},
};

} // namespace

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config: cannot open '" + path + "'");

    std::map<std::string, Section> sections;
    std::string line, section;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw UsageError("config: malformed section header at line " + std::to_string(lineNo));
            section = trim(t.substr(1, t.size() - 2));
            if (!kAllowedKeys.count(section))
                throw UsageError("config: unknown section '" + section + "'");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError("config: expected key=value at line " + std::to_string(lineNo));
        if (section.empty())
            throw UsageError("config: key outside any section at line " + std::to_string(lineNo));
        const std::string key = trim(t.substr(0, eq));
        if (!kAllowedKeys.at(section).count(key))
            throw UsageError("config: unknown key '" + key + "' in section [" + section + "]");
        sections[section][key] = trim(t.substr(eq + 1));
    }

    const Section& exp = sections["experiment"];
    if (!exp.count("name")) throw UsageError("config: [experiment] name is required");
    RunConfig c = default_config(parse_experiment_name(exp.at("name")));

    auto maybe = [&](const char* sec, const char* key) -> const std::string* {
        auto s = sections.find(sec);
        if (s == sections.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    };

    if (auto* v = maybe("experiment", "beta")) c.beta = static_cast<int>(toLong("beta", *v));
    if (auto* v = maybe("experiment", "n_ladder")) {
        c.nLadder.clear();
        for (const auto& item : splitList(*v))
            c.nLadder.push_back(static_cast<int>(toLong("n_ladder", item)));
    }
    if (auto* v = maybe("experiment", "s_grid")) {
        c.sGrid.clear();
        for (const auto& item : splitList(*v)) c.sGrid.push_back(toDouble("s_grid", item));
    }
    if (auto* v = maybe("experiment", "lambda_ladder")) {
        c.lambdas.clear();
        for (const auto& item : splitList(*v)) c.lambdas.push_back(toDouble("lambda_ladder", item));
    }
    if (auto* v = maybe("experiment", "h_base")) c.hBase = toDouble("h_base", *v);
    if (auto* v = maybe("experiment", "out_dir")) c.outputDir = *v;

    if (sections.count("geometry")) {
        micro::WireGeometry g = c.geometry.value_or(micro::WireGeometry{});
        if (auto* v = maybe("geometry", "n")) g.n = static_cast<int>(toLong("n", *v));
        if (auto* v = maybe("geometry", "gamma")) g.gamma = toDouble("gamma", *v);
        if (auto* v = maybe("geometry", "h1")) g.h1 = toDouble("h1", *v);
        if (auto* v = maybe("geometry", "h2")) g.h2 = toDouble("h2", *v);
        if (auto* v = maybe("geometry", "energy")) g.energy = toDouble("energy", *v);
        c.geometry = g;
    }

    if (auto* v = maybe("sde", "ds")) c.ds = toDouble("ds", *v);
    if (auto* v = maybe("sde", "policy")) {
        if (*v == "exp") c.expPolicy = true;
        else if (*v == "euler") c.expPolicy = false;
        else throw UsageError("config: policy must be 'exp' or 'euler'");
    }

    if (auto* v = maybe("mc", "trajectories")) c.nTrajectories = toLong("trajectories", *v);
    if (auto* v = maybe("mc", "master_seed")) c.masterSeed = static_cast<std::uint64_t>(toLong("master_seed", *v));
    if (auto* v = maybe("mc", "threads")) c.threads = static_cast<int>(toLong("threads", *v));

    if (auto* v = maybe("tolerances", "ohm_ref_tol")) c.ohmTolAtRef = toDouble("ohm_ref_tol", *v);
    if (auto* v = maybe("tolerances", "ohm_ref_n")) c.ohmRefN = static_cast<int>(toLong("ohm_ref_n", *v));
    if (auto* v = maybe("tolerances", "ohm_ref_s")) c.ohmRefS = toDouble("ohm_ref_s", *v);
    if (auto* v = maybe("tolerances", "ucf_var_low")) c.ucfVarLow = toDouble("ucf_var_low", *v);
    if (auto* v = maybe("tolerances", "ucf_var_high")) c.ucfVarHigh = toDouble("ucf_var_high", *v);
    if (auto* v = maybe("tolerances", "ucf_ratio_tol")) c.ucfRatioTol = toDouble("ucf_ratio_tol", *v);
    if (auto* v = maybe("tolerances", "ucf_ref_s")) c.ucfRefS = toDouble("ucf_ref_s", *v);
    if (auto* v = maybe("tolerances", "cov_var_rel_tol")) c.covVarRelTol = toDouble("cov_var_rel_tol", *v);
    if (auto* v = maybe("tolerances", "cov_diag_corr_min")) c.covDiagCorrMin = toDouble("cov_diag_corr_min", *v);
    if (auto* v = maybe("tolerances", "cov_off_corr_max")) c.covOffCorrMax = toDouble("cov_off_corr_max", *v);
    if (auto* v = maybe("tolerances", "compare_sigma")) c.compareSigma = toDouble("compare_sigma", *v);
    if (auto* v = maybe("tolerances", "compare_ks_alpha")) c.compareKsAlpha = toDouble("compare_ks_alpha", *v);
    if (auto* v = maybe("tolerances", "hierarchy_sigma")) c.hierarchySigma = toDouble("hierarchy_sigma", *v);
    if (auto* v = maybe("tolerances", "hierarchy_ps")) {
        c.hierarchyPs.clear();
        for (const auto& item : splitList(*v))
            c.hierarchyPs.push_back(static_cast<int>(toLong("hierarchy_ps", item)));
    }
    if (auto* v = maybe("tolerances", "hierarchy_delta_s")) c.hierarchyDeltaS = toDouble("hierarchy_delta_s", *v);
    if (auto* v = maybe("tolerances", "micro_mean_tol")) c.microMeanTol = toDouble("micro_mean_tol", *v);

    c.validate();
    return c;
}

} // namespace dmpk::harness
