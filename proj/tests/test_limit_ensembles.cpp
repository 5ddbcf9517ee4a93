#include <doctest.h>

#include <cmath>

#include "dmpk/experiments.hpp"
#include "dmpk/limit_ensembles.hpp"
#include "dmpk/stats.hpp"

using namespace dmpk;
using namespace dmpk::limits;
using dmpk::ideal::IncrementKind;
using dmpk::ideal::NoiseIncrement;
using dmpk::ideal::StepPolicy;

namespace {

LimitEnsembleParams zParams(IncrementKind kind, int n, double energy, bool unitNorm = false) {
    LimitEnsembleParams p;
    p.kind = kind;
    p.n = n;
    p.energy = energy;
    p.unitNormalized = unitNorm;
    return p;
}

micro::WireGeometry smallHoppingGeometry(double h) {
    micro::WireGeometry g;
    g.n = 3;
    g.gamma = 0.1;
    g.h1 = g.h2 = h;
    g.energy = 1.0;
    return g;
}

double lieDefect(const NoiseIncrement& inc) {
    MatrixXcd dl = inc.assemble();
    MatrixXcd sz = sigmaZ(inc.n);
    return (dl.adjoint() * sz + sz * dl).norm();
}

} // namespace

TEST_CASE("limit increments: shared diagonal driver and exact block relations") {
    RngStream rng(11);
    const int n = 4;
    for (auto kind : {IncrementKind::LimitZGamma, IncrementKind::LimitZ0}) {
        LimitEnsembleParams p = zParams(kind, n, 1.0);
        for (int rep = 0; rep < 20; ++rep) {
            NoiseIncrement inc = sample_limit_increment(p, 0.01, rng);
            CHECK(lieDefect(inc) < 1e-15);
            // all a-diagonal entries are the same Brownian increment
            for (int mu = 1; mu < n; ++mu) CHECK(inc.blockA(mu, mu) == inc.blockA(0, 0));
            if (kind == IncrementKind::LimitZ0) {
                CHECK((inc.blockAprime - inc.blockA.conjugate()).norm() == 0.0);
                CHECK((inc.blockB - inc.blockB.transpose()).norm() == 0.0);
            } else {
                for (int mu = 0; mu < n; ++mu)
                    CHECK(inc.blockAprime(mu, mu) == -inc.blockA(mu, mu));
            }
        }
    }
    CHECK_THROWS_AS(sample_limit_increment(zParams(IncrementKind::LimitYGamma, n, 1.0), 0.01, rng),
                    ContractError);
}

TEST_CASE("limit increments: b-block second moment N ds / (4 - E^2)") {
    const int n = 4;
    const double ds = 0.01;
    const double energy = 1.0;
    const long draws = 100000;
    RngStream rng(12);
    LimitEnsembleParams p = zParams(IncrementKind::LimitZGamma, n, energy);
    double acc = 0.0;
    for (long i = 0; i < draws; ++i)
        acc += sample_limit_increment(p, ds, rng).blockB.squaredNorm();
    const double target = n * ds / (4.0 - energy * energy);
    const double se = target * 2.0 / std::sqrt(double(draws));
    CHECK(std::abs(acc / draws - target) < 4.0 * se);
}

TEST_CASE("limit increments: Ito cancellation of dZ* Sigma_z dZ") {
    const int n = 3;
    const double ds = 0.01;
    const long draws = 60000;
    RngStream rng(13);
    LimitEnsembleParams p = zParams(IncrementKind::LimitZGamma, n, 1.0);
    MatrixXcd sz = sigmaZ(n);
    MatrixXcd meanAcc = MatrixXcd::Zero(2 * n, 2 * n);
    Eigen::MatrixXd sqAcc = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (long i = 0; i < draws; ++i) {
        MatrixXcd dl = sample_limit_increment(p, ds, rng).assemble();
        MatrixXcd q = dl.adjoint() * sz * dl / ds;
        meanAcc += q;
        sqAcc += q.cwiseAbs2().real();
    }
    for (int a = 0; a < 2 * n; ++a)
        for (int b = 0; b < 2 * n; ++b) {
            const double se = std::sqrt(sqAcc(a, b) / draws / draws);
            CHECK(std::abs(meanAcc(a, b)) / draws < 4.0 * se + 1e-12);
        }
}

TEST_CASE("limit vs ideal beta=1: diagonal b variance ratio 2N/(N+1)") {
    const int n = 4;
    const double ds = 0.01;
    const long draws = 100000;
    RngStream rng(14);
    LimitEnsembleParams p = zParams(IncrementKind::LimitZ0, n, 1.0, /*unitNorm=*/true);
    double idealAcc = 0.0, limitAcc = 0.0;
    for (long i = 0; i < draws; ++i) {
        NoiseIncrement idealInc = ideal::sample_ideal_increment(SymmetryClass(1), n, ds, rng);
        NoiseIncrement limitInc = sample_limit_increment(p, ds, rng);
        for (int mu = 0; mu < n; ++mu) {
            idealAcc += std::norm(idealInc.blockB(mu, mu));
            limitAcc += std::norm(limitInc.blockB(mu, mu));
        }
    }
    const double ratio = idealAcc / limitAcc;
    CHECK(ratio == doctest::Approx(2.0 * n / (n + 1.0)).epsilon(0.05));
}

TEST_CASE("Y weights degenerate to the Z weight as the hoppings vanish") {
    micro::WireGeometry g = smallHoppingGeometry(1e-4);
    micro::DispersionData disp = micro::solve_dispersion(g, false);
    LimitEnsembleParams y = zParams(IncrementKind::LimitYGamma, g.n, g.energy);
    y.velocities = disp;
    const Eigen::MatrixXd wy = increment_weights(y);
    const double wz = 1.0 / std::sqrt((4.0 - g.energy * g.energy) * g.n);
    for (int a = 0; a < 2 * g.n; ++a)
        for (int b = 0; b < 2 * g.n; ++b)
            CHECK(wy(a, b) == doctest::Approx(wz).epsilon(1e-3));
}

TEST_CASE("limit SDE: trivial path, group invariants of every kind") {
    MatrixSdePath trivial =
        integrate_limit_sde(zParams(IncrementKind::LimitZGamma, 3, 1.0), 0.0, 1e-3, 5, StepPolicy::Exp);
    CHECK(trivial.m.size() == 1);
    CHECK((trivial.m[0].m - MatrixXcd::Identity(6, 6)).norm() == 0.0);

    micro::WireGeometry g = smallHoppingGeometry(0.05);
    micro::DispersionData disp = micro::solve_dispersion(g, false);
    for (auto kind : {IncrementKind::LimitZGamma, IncrementKind::LimitZ0,
                      IncrementKind::LimitYGamma, IncrementKind::LimitY0}) {
        LimitEnsembleParams p = zParams(kind, 3, 1.0);
        if (kind == IncrementKind::LimitYGamma || kind == IncrementKind::LimitY0)
            p.velocities = disp;
        MatrixSdePath path = integrate_limit_sde(p, 0.4, 1e-3, 17, StepPolicy::Exp, 4);
        for (const TransferMatrix& m : path.m) {
            CHECK(pseudo_unitarity_defect(m) < 1e-10);
            if (kind == IncrementKind::LimitZ0) CHECK(time_reversal_defect(m) < 1e-10);
        }
    }
}

TEST_CASE("beta=2 transmission law: limit ensemble matches the ideal TUE" *
          doctest::description("paired MC smoke test at N=4, s=0.5")) {
    const int n = 4;
    const long nTraj = 3000;
    const std::vector<double> sGrid{0.5};

    harness::MatrixEnsembleSpec idealSpec;
    idealSpec.ideal = true;
    idealSpec.beta = 2;
    harness::MatrixEnsembleSpec limitSpec;
    limitSpec.ideal = false;
    limitSpec.limit = zParams(IncrementKind::LimitZGamma, n, 1.0, /*unitNorm=*/true);

    std::vector<double> gIdeal(nTraj), gLimit(nTraj);
    harness::run_matrix_ensemble(idealSpec, n, sGrid, 1e-3, StepPolicy::Exp, nTraj, 31, 1,
                                 [&](long t, int, const TransferMatrix& m) {
                                     gIdeal[t] = transmission_spectrum(m).g;
                                 });
    harness::run_matrix_ensemble(limitSpec, n, sGrid, 1e-3, StepPolicy::Exp, nTraj, 32, 1,
                                 [&](long t, int, const TransferMatrix& m) {
                                     gLimit[t] = transmission_spectrum(m).g;
                                 });
    auto a = stats::mc_estimate(gIdeal, "ideal");
    auto b = stats::mc_estimate(gLimit, "limit");
    CHECK(std::abs(a.mean - b.mean) < 3.0 * std::hypot(a.meanStdErr, b.meanStdErr));
}
