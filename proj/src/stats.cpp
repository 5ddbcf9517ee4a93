#include "dmpk/stats.hpp"

#include <cmath>
#include <vector>

namespace dmpk::stats {

double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 32) {
        double acc = 0.0;
        for (double v : x) acc += v;
        return acc;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

StatSummary mc_estimate(std::span<const double> samples, const std::string& name) {
    if (samples.size() < 2)
        throw ContractError("mc_estimate: need at least 2 samples for " + name);
    const double n = static_cast<double>(samples.size());
    StatSummary out;
    out.name = name;
    out.nSamples = samples.size();
    out.mean = pairwise_sum(samples) / n;

    std::vector<double> d2(samples.size()), d4(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = samples[i] - out.mean;
        d2[i] = d * d;
        d4[i] = d2[i] * d2[i];
    }
    const double m2 = pairwise_sum(d2) / n;
    const double m4 = pairwise_sum(d4) / n;
    out.variance = m2 * n / (n - 1.0);
    out.meanStdErr = std::sqrt(out.variance / n);
    // SE of the sample variance from the fourth moment
    const double varOfVar = (m4 - (n - 3.0) / (n - 1.0) * m2 * m2) / n;
    out.varStdErr = varOfVar > 0.0 ? std::sqrt(varOfVar) : 0.0;
    return out;
}

} // namespace dmpk::stats
