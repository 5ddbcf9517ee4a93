#include "dmpk/ideal_dmpk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dmpk::ideal {

MatrixXcd NoiseIncrement::assemble() const {
    MatrixXcd dl(2 * n, 2 * n);
    dl.topLeftCorner(n, n) = blockA;
    dl.topRightCorner(n, n) = blockB;
    dl.bottomLeftCorner(n, n) = blockB.adjoint();
    dl.bottomRightCorner(n, n) = blockAprime;
    return dl;
}

namespace {

// Anti-Hermitian a-block with off-diagonal variance ds/N and purely
// imaginary diagonal of variance ds/N, eq. (2.6)-style.
MatrixXcd sampleABlock(int n, double ds, RngStream& rng) {
    MatrixXcd a(n, n);
    const double offScale = std::sqrt(ds / (2.0 * n));
    const double diagScale = std::sqrt(ds / n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = Complex(0.0, diagScale * rng.normal());
        for (int j = i + 1; j < n; ++j) {
            const Complex z(offScale * rng.normal(), offScale * rng.normal());
            a(i, j) = z;
            a(j, i) = -std::conj(z);
        }
    }
    return a;
}

} // namespace

NoiseIncrement sample_ideal_increment(const SymmetryClass& cls, int n, double ds, RngStream& rng) {
    if (cls.beta == 4)
        throw UnsupportedClassError("sample_ideal_increment: no matrix ensemble for beta=4");
    if (n < 1) throw ContractError("sample_ideal_increment: n must be >= 1");
    if (!(ds > 0.0)) throw ContractError("sample_ideal_increment: ds must be > 0");

    NoiseIncrement inc;
    inc.n = n;
    inc.ds = ds;
    inc.kind = cls.beta == 1 ? IncrementKind::IdealB1 : IncrementKind::IdealB2;
    inc.blockA = sampleABlock(n, ds, rng);

    if (cls.beta == 2) {
        inc.blockAprime = sampleABlock(n, ds, rng);
        inc.blockB.resize(n, n);
        const double scale = std::sqrt(ds / (2.0 * n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                inc.blockB(i, j) = Complex(scale * rng.normal(), scale * rng.normal());
    } else {
        inc.blockAprime = inc.blockA.conjugate();
        inc.blockB.resize(n, n);
        const double offScale = std::sqrt(ds / (2.0 * (n + 1.0)));
        const double diagScale = std::sqrt(ds / (n + 1.0));
        for (int i = 0; i < n; ++i) {
            inc.blockB(i, i) = Complex(diagScale * rng.normal(), diagScale * rng.normal());
            for (int j = i + 1; j < n; ++j) {
                const Complex z(offScale * rng.normal(), offScale * rng.normal());
                inc.blockB(i, j) = z;
                inc.blockB(j, i) = z;
            }
        }
    }
    return inc;
}

MatrixXcd expm_small(const MatrixXcd& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff(); // infinity norm
    int squarings = 0;
    MatrixXcd x = a;
    if (norm > 0.25) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
        x *= std::ldexp(1.0, -squarings);
    }
    const int dim = static_cast<int>(a.rows());
    // 12-term Taylor by Horner; remainder < 1e-17 at ||x|| <= 0.25.
    MatrixXcd e = MatrixXcd::Identity(dim, dim) + x / 12.0;
    for (int k = 11; k >= 1; --k)
        e = MatrixXcd::Identity(dim, dim) + (x * e) / static_cast<double>(k);
    for (int i = 0; i < squarings; ++i) e = e * e;
    return e;
}

TransferMatrix group_step(const TransferMatrix& m, const NoiseIncrement& dl, StepPolicy policy) {
    if (dl.n != m.n()) throw DimensionError("group_step: increment dimension mismatch");
    if (policy == StepPolicy::Exp) {
        const double lieDefect = (dl.blockA + dl.blockA.adjoint()).norm() +
                                 (dl.blockAprime + dl.blockAprime.adjoint()).norm();
        if (lieDefect > 1e-12)
            throw ContractError("group_step: Exp policy requires a Lie-algebra increment");
        return TransferMatrix(expm_small(dl.assemble()) * m.m);
    }
    MatrixXcd step = dl.assemble();
    step += MatrixXcd::Identity(2 * dl.n, 2 * dl.n);
    return TransferMatrix(step * m.m);
}

MatrixSdePath integrate_matrix_sde(const SymmetryClass& cls, int n, double sMax, double ds,
                                   std::uint64_t seed, StepPolicy policy, int gridPoints) {
    if (sMax < 0.0) throw ContractError("integrate_matrix_sde: sMax must be >= 0");
    if (ds > 1e-2) throw ContractError("integrate_matrix_sde: ds must be <= 1e-2");
    if (sMax > 0.0 && ds >= sMax) throw ContractError("integrate_matrix_sde: ds must be < sMax");

    MatrixSdePath path;
    TransferMatrix m = TransferMatrix::identity(n);
    path.s.push_back(0.0);
    path.m.push_back(m);
    if (sMax == 0.0 || gridPoints < 1) return path;

    RngStream rng(seed);
    const double segment = sMax / gridPoints;
    for (int gp = 1; gp <= gridPoints; ++gp) {
        const long steps = std::max(1L, std::lround(segment / ds));
        const double h = segment / static_cast<double>(steps);
        for (long i = 0; i < steps; ++i) {
            NoiseIncrement dl = sample_ideal_increment(cls, n, h, rng);
            m = group_step(m, dl, policy);
        }
        path.s.push_back(gp * segment);
        path.m.push_back(m);
    }
    return path;
}

EigenvalueState degenerate_start(int n, double delta) {
    if (n < 1) throw ContractError("degenerate_start: n must be >= 1");
    EigenvalueState st;
    st.t.resize(n);
    for (int k = 0; k < n; ++k) st.t[k] = 1.0 - (k + 1) * delta;
    st.s = 0.0;
    return st;
}

void eigenvalue_drift_diffusion(const EigenvalueState& state, const SymmetryClass& cls, int n,
                                VectorXd& v, VectorXd& d) {
    if (state.t.size() != n) throw ContractError("eigenvalue_drift_diffusion: state size mismatch");
    const double* t = state.t.data();
    const double denom = cls.beta * n + 2.0 - cls.beta;
    const double common = 2.0 / denom;
    const double halfBeta = cls.beta / 2.0;

    v.resize(n);
    d.resize(n);
    VectorXd pairSum = VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) {
        for (int j = k + 1; j < n; ++j) {
            const double gap = t[k] - t[j];
            if (std::abs(gap) < kGapFloor * std::max(std::abs(t[k]), std::abs(t[j])))
                throw DegeneracyError("eigenvalue_drift_diffusion: eigenvalue gap below floor");
            const double r = (t[k] + t[j] - 2.0 * t[k] * t[j]) / gap;
            pairSum[k] += r;
            pairSum[j] -= r;
        }
    }
    for (int k = 0; k < n; ++k) {
        v[k] = -t[k] + common * t[k] * (1.0 - t[k] + halfBeta * pairSum[k]);
        d[k] = 2.0 * t[k] * std::sqrt(std::max(0.0, 1.0 - t[k]) / denom);
    }
}

EigenvalueState step_eigenvalue_sde(const EigenvalueState& state, const SymmetryClass& cls, int n,
                                    double ds, RngStream& rng) {
    VectorXd v, d;
    eigenvalue_drift_diffusion(state, cls, n, v, d);
    EigenvalueState next;
    next.t.resize(n);
    const double sqrtDs = std::sqrt(ds);
    for (int k = 0; k < n; ++k) {
        double val = state.t[k] + v[k] * ds + d[k] * sqrtDs * rng.normal();
        val = std::min(val, 1.0);
        val = std::max(val, kClampFloor);
        next.t[k] = val;
    }
    std::sort(next.t.data(), next.t.data() + n, std::greater<double>());
    for (int k = 1; k < n; ++k) {
        const double cap = next.t[k - 1] * (1.0 - kGapFloor);
        if (next.t[k] > cap) next.t[k] = cap;
    }
    next.s = state.s + ds;
    return next;
}

double drift_sum(const EigenvalueState& state, const SymmetryClass& cls, int n) {
    if (state.t.size() != n) throw ContractError("drift_sum: state size mismatch");
    const double gamma = cls.beta / (cls.beta * n + 2.0 - cls.beta);
    const double g = state.t.sum();
    const double g2 = state.t.array().square().sum();
    return -gamma * (g * g - (1.0 - 2.0 / cls.beta) * g2);
}

} // namespace dmpk::ideal
