#include "dmpk/limit_ensembles.hpp"

#include <cmath>

namespace dmpk::limits {

namespace {

bool isYKind(IncrementKind k) {
    return k == IncrementKind::LimitYGamma || k == IncrementKind::LimitY0;
}

bool isTimeReversal(IncrementKind k) {
    return k == IncrementKind::LimitZ0 || k == IncrementKind::LimitY0;
}

void validate(const LimitEnsembleParams& p) {
    if (p.n < 1) throw ContractError("limit ensemble: n must be >= 1");
    switch (p.kind) {
        case IncrementKind::LimitZGamma:
        case IncrementKind::LimitZ0:
        case IncrementKind::LimitYGamma:
        case IncrementKind::LimitY0:
            break;
        default:
            throw ContractError("limit ensemble: kind must be one of the LIMIT_* laws");
    }
    if (!isYKind(p.kind) && !(std::abs(p.energy) < 2.0))
        throw ContractError("limit ensemble: need |energy| < 2");
    if (isYKind(p.kind)) {
        if (!p.velocities)
            throw ContractError("limit ensemble: Y kinds require dispersion velocities");
        if (p.velocities->vPlus.size() != p.n)
            throw ContractError("limit ensemble: velocity data does not match n");
    }
}

} // namespace

Eigen::MatrixXd increment_weights(const LimitEnsembleParams& p) {
    validate(p);
    const int n = p.n;
    Eigen::MatrixXd w(2 * n, 2 * n);
    if (isYKind(p.kind)) {
        VectorXd slot(2 * n);
        for (int nu = 0; nu < n; ++nu) {
            slot[nu] = std::abs(p.velocities->vPlus[nu]);
            slot[n + nu] = std::abs(p.velocities->vPlus[(n - nu) % n]);
        }
        for (int a = 0; a < 2 * n; ++a)
            for (int b = 0; b < 2 * n; ++b) w(a, b) = 1.0 / std::sqrt(n * slot[a] * slot[b]);
    } else {
        const double f = p.unitNormalized ? 1.0 / std::sqrt(double(n))
                                          : 1.0 / std::sqrt((4.0 - p.energy * p.energy) * n);
        w.setConstant(f);
    }
    return w;
}

NoiseIncrement sample_limit_increment(const LimitEnsembleParams& p, double ds, RngStream& rng) {
    validate(p);
    if (!(ds > 0.0)) throw ContractError("sample_limit_increment: ds must be > 0");
    const int n = p.n;
    const Eigen::MatrixXd w = increment_weights(p);
    const double sqrtDs = std::sqrt(ds);
    const Complex iu(0.0, 1.0);
    const bool tr = isTimeReversal(p.kind);

    NoiseIncrement inc;
    inc.n = n;
    inc.ds = ds;
    inc.kind = p.kind;
    inc.blockA.resize(n, n);
    inc.blockB.resize(n, n);
    inc.blockAprime.resize(n, n);

    // one shared Brownian driver for every diagonal element
    const double dW = sqrtDs * rng.normal();
    for (int mu = 0; mu < n; ++mu) {
        inc.blockA(mu, mu) = iu * w(mu, mu) * dW;
        for (int nu = mu + 1; nu < n; ++nu) {
            const Complex z = w(mu, nu) * sqrtDs * rng.complexNormal();
            inc.blockA(mu, nu) = z;
            inc.blockA(nu, mu) = -std::conj(z);
        }
    }

    if (tr) {
        inc.blockAprime = inc.blockA.conjugate();
        for (int mu = 0; mu < n; ++mu)
            for (int nu = mu; nu < n; ++nu) {
                const Complex z = w(mu, n + nu) * sqrtDs * rng.complexNormal();
                inc.blockB(mu, nu) = z;
                inc.blockB(nu, mu) = z;
            }
    } else {
        for (int mu = 0; mu < n; ++mu) {
            inc.blockAprime(mu, mu) = -iu * w(n + mu, n + mu) * dW;
            for (int nu = mu + 1; nu < n; ++nu) {
                const Complex z = w(n + mu, n + nu) * sqrtDs * rng.complexNormal();
                inc.blockAprime(mu, nu) = z;
                inc.blockAprime(nu, mu) = -std::conj(z);
            }
        }
        for (int mu = 0; mu < n; ++mu)
            for (int nu = 0; nu < n; ++nu)
                inc.blockB(mu, nu) = w(mu, n + nu) * sqrtDs * rng.complexNormal();
    }
    return inc;
}

MatrixSdePath integrate_limit_sde(const LimitEnsembleParams& params, double sMax, double ds,
                                  std::uint64_t seed, StepPolicy policy, int gridPoints) {
    validate(params);
    if (sMax < 0.0) throw ContractError("integrate_limit_sde: sMax must be >= 0");
    if (ds > 1e-2) throw ContractError("integrate_limit_sde: ds must be <= 1e-2");
    if (sMax > 0.0 && ds >= sMax) throw ContractError("integrate_limit_sde: ds must be < sMax");

    MatrixSdePath path;
    TransferMatrix m = TransferMatrix::identity(params.n);
    path.s.push_back(0.0);
    path.m.push_back(m);
    if (sMax == 0.0 || gridPoints < 1) return path;

    RngStream rng(seed);
    const double segment = sMax / gridPoints;
    for (int gp = 1; gp <= gridPoints; ++gp) {
        const long steps = std::max(1L, std::lround(segment / ds));
        const double h = segment / static_cast<double>(steps);
        for (long i = 0; i < steps; ++i) {
            NoiseIncrement dl = sample_limit_increment(params, h, rng);
            m = ideal::group_step(m, dl, policy);
        }
        path.s.push_back(gp * segment);
        path.m.push_back(m);
    }
    return path;
}

} // namespace dmpk::limits
