#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "dmpk/errors.hpp"

namespace dmpk::stats {

/// Deterministic order-independent reduction: pairwise summation over a
/// fixed index order gives the same bytes for any worker count.
double pairwise_sum(std::span<const double> x);

/// Sample summary of one scalar observable.
struct StatSummary {
    std::string name;
    double mean = 0.0;
    double variance = 0.0;   // unbiased
    double meanStdErr = 0.0; // sqrt(variance / n)
    double varStdErr = 0.0;  // large-sample standard error of the variance
    std::size_t nSamples = 0;
    double s = 0.0; // macroscopic length the samples belong to
};

/// Mean, unbiased variance and their standard errors. Throws ContractError
/// for fewer than 2 samples.
StatSummary mc_estimate(std::span<const double> samples, const std::string& name);

} // namespace dmpk::stats
