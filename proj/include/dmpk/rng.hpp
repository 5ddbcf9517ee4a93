#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace dmpk {

/// SplitMix64 step, used to derive well-separated seeds from (masterSeed, streamIndex).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Well-separated child seed for work unit `index` of a run seeded with
/// `master`; used where an API takes a single seed per realization.
inline std::uint64_t derived_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (index + 0x61c88647ULL));
    return splitmix64(s);
}

/// One independent random stream. Trajectory k of a run seeded with `master`
/// always sees the same sequence, no matter how work is scheduled.
class RngStream {
public:
    RngStream(std::uint64_t masterSeed, std::uint64_t streamIndex) {
        std::uint64_t s = masterSeed ^ (0x6a09e667f3bcc909ULL + streamIndex * 0x9e3779b97f4a7c15ULL);
        std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
        engine_.seed(seq);
    }

    explicit RngStream(std::uint64_t seed) : RngStream(seed, 0) {}

    /// Standard normal draw.
    double normal() { return normal_(engine_); }

    /// Normal with standard deviation `sd`.
    double normal(double sd) { return sd * normal_(engine_); }

    /// Standard complex normal: E|z|^2 = 1, E z^2 = 0.
    std::complex<double> complexNormal() {
        static constexpr double invSqrt2 = 0.7071067811865475244;
        return {invSqrt2 * normal(), invSqrt2 * normal()};
    }

    double uniform01() { return uniform_(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace dmpk
