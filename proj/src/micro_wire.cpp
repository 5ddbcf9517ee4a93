#include "dmpk/micro_wire.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>

namespace dmpk::micro {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

double dispersionEnergy(const WireGeometry& g, double k, int nu) {
    const double theta = g.gamma + kTwoPi * nu / g.n;
    return 2.0 * std::cos(k) + 2.0 * g.h1 * std::cos(theta) + 2.0 * g.h2 * std::cos(k - theta);
}

double velocity(const WireGeometry& g, double k, int nu) {
    const double theta = g.gamma + kTwoPi * nu / g.n;
    return -2.0 * std::sin(k) - 2.0 * g.h2 * std::sin(k - theta);
}

struct QuadTerm {
    int sign;   // +-1
    int branch; // 0 = +, 1 = -
    int nu;
    double value; // sign * k^branch_nu
};

bool cancels(const QuadTerm& a, const QuadTerm& b, int n, bool timeReversal) {
    if (a.sign == -b.sign && a.branch == b.branch && a.nu == b.nu) return true;
    if (timeReversal && a.sign == b.sign && a.branch != b.branch && a.nu == (n - b.nu) % n)
        return true;
    return false;
}

double chaoticityFrom(const DispersionData& disp, const WireGeometry& geom) {
    const int n = geom.n;
    const bool tr = geom.gamma == 0.0;
    std::vector<QuadTerm> terms;
    terms.reserve(4 * n);
    for (int sign : {+1, -1})
        for (int branch : {0, 1})
            for (int nu = 0; nu < n; ++nu) {
                const double k = branch == 0 ? disp.kPlus[nu] : disp.kMinus[nu];
                terms.push_back({sign, branch, nu, sign * k});
            }

    const int m = static_cast<int>(terms.size());
    double best = std::numeric_limits<double>::infinity();
    for (int i1 = 0; i1 < m; ++i1)
        for (int i2 = 0; i2 < m; ++i2)
            for (int i3 = 0; i3 < m; ++i3)
                for (int i4 = 0; i4 < m; ++i4) {
                    const QuadTerm& t1 = terms[i1];
                    const QuadTerm& t2 = terms[i2];
                    const QuadTerm& t3 = terms[i3];
                    const QuadTerm& t4 = terms[i4];
                    const bool excluded =
                        (cancels(t1, t2, n, tr) && cancels(t3, t4, n, tr)) ||
                        (cancels(t1, t3, n, tr) && cancels(t2, t4, n, tr)) ||
                        (cancels(t1, t4, n, tr) && cancels(t2, t3, n, tr));
                    if (excluded) continue;
                    const double sum = t1.value + t2.value + t3.value + t4.value;
                    best = std::min(best, std::abs(std::remainder(sum, kTwoPi)));
                }
    return best;
}

MatrixXcd shiftMatrix(int n) {
    MatrixXcd s = MatrixXcd::Zero(n, n);
    for (int z = 0; z < n; ++z) s(z, (z + 1) % n) = 1.0;
    return s;
}

} // namespace

void WireGeometry::validate() const {
    if (n < 1) throw ContractError("WireGeometry: channel count must be >= 1");
    if (energy == 0.0) throw std::domain_error("WireGeometry: energy must be nonzero");
    if (!(std::abs(energy) + 2.0 * h1 + 2.0 * h2 < 2.0))
        throw std::domain_error("WireGeometry: need |E| + 2 h1 + 2 h2 < 2");
    if (h1 < kMinHopping || h2 < kMinHopping)
        throw std::domain_error("WireGeometry: hoppings must be >= 1e-6 (h=0 is degenerate)");
    if (gamma < 0.0 || !(gamma < M_PI / n))
        throw std::domain_error("WireGeometry: need 0 <= gamma < pi/N");
}

DispersionData solve_dispersion(const WireGeometry& geom, bool computeChaoticity) {
    geom.validate();
    const int n = geom.n;
    DispersionData d;
    d.kPlus.resize(n);
    d.kMinus.resize(n);
    d.vPlus.resize(n);
    d.vMinus.resize(n);

    for (int nu = 0; nu < n; ++nu) {
        const double theta = geom.gamma + kTwoPi * nu / n;
        const double a = 2.0 + 2.0 * geom.h2 * std::cos(theta);
        const double b = 2.0 * geom.h2 * std::sin(theta);
        const double r = std::hypot(a, b);
        const double delta = std::atan2(b, a);
        const double rhs = geom.energy - 2.0 * geom.h1 * std::cos(theta);
        if (std::abs(rhs) >= r)
            throw EvanescentModeError("solve_dispersion: no real wavevector in channel " +
                                      std::to_string(nu));
        const double alpha = std::acos(rhs / r);
        const double k1 = std::remainder(delta + alpha, kTwoPi);
        const double k2 = std::remainder(delta - alpha, kTwoPi);
        const double v1 = velocity(geom, k1, nu);
        const double v2 = velocity(geom, k2, nu);
        if (v1 == 0.0 || v2 == 0.0 || (v1 > 0.0) == (v2 > 0.0))
            throw ConditioningError("solve_dispersion: degenerate band point in channel " +
                                    std::to_string(nu));
        if (v1 > 0.0) {
            d.kPlus[nu] = k1;
            d.vPlus[nu] = v1;
            d.kMinus[nu] = k2;
            d.vMinus[nu] = v2;
        } else {
            d.kPlus[nu] = k2;
            d.vPlus[nu] = v2;
            d.kMinus[nu] = k1;
            d.vMinus[nu] = v1;
        }
        if (std::abs(dispersionEnergy(geom, d.kPlus[nu], nu) - geom.energy) > 1e-12 ||
            std::abs(dispersionEnergy(geom, d.kMinus[nu], nu) - geom.energy) > 1e-12)
            throw NumericError("solve_dispersion: residual above 1e-12");
    }
    if (computeChaoticity) d.cha = chaoticityFrom(d, geom);
    return d;
}

double chaoticity(const WireGeometry& geom) {
    DispersionData d = solve_dispersion(geom, false);
    return chaoticityFrom(d, geom);
}

LayerDisorder sample_layer_disorder(int n, DisorderDistribution dist, RngStream& rng) {
    LayerDisorder layer;
    layer.distribution = dist;
    layer.v.resize(n);
    switch (dist) {
        case DisorderDistribution::Gaussian:
            for (int z = 0; z < n; ++z) layer.v[z] = rng.normal();
            break;
        case DisorderDistribution::Rademacher:
            for (int z = 0; z < n; ++z) layer.v[z] = rng.uniform01() < 0.5 ? -1.0 : 1.0;
            break;
        case DisorderDistribution::Uniform: {
            const double sqrt3 = std::sqrt(3.0);
            for (int z = 0; z < n; ++z) layer.v[z] = sqrt3 * (2.0 * rng.uniform01() - 1.0);
            break;
        }
    }
    return layer;
}

WireModel::WireModel(const WireGeometry& geom, bool computeChaoticity)
    : geom_(geom), disp_(solve_dispersion(geom, computeChaoticity)) {
    const int n = geom.n;
    const Complex iu(0.0, 1.0);

    q_.resize(n, n);
    for (int z = 0; z < n; ++z)
        for (int nu = 0; nu < n; ++nu)
            q_(z, nu) = std::exp(iu * (kTwoPi * nu * z / n)) / std::sqrt(double(n));

    piPerm_.resize(n);
    for (int nu = 0; nu < n; ++nu) piPerm_[nu] = (n - nu) % n;

    slotK_.resize(2 * n);
    slotW_.resize(2 * n);
    for (int nu = 0; nu < n; ++nu) {
        slotK_[nu] = disp_.kPlus[nu];
        slotW_[nu] = std::abs(disp_.vPlus[nu]);
        const int conj = piPerm_[nu];
        slotK_[n + nu] = disp_.kMinus[conj];
        slotW_[n + nu] = std::abs(disp_.vPlus[conj]);
    }
    if (slotW_.minCoeff() < kMinVelocity)
        throw ConditioningError("WireModel: near-zero channel velocity");

    // Upsilon = [[e^{ik+}/sqrt|v+|, e^{ik-}/sqrt|v-|], [1/sqrt|v+|, 1/sqrt|v-|]] diag(1, Pi)
    MatrixXcd upsilon = MatrixXcd::Zero(2 * n, 2 * n);
    for (int nu = 0; nu < n; ++nu) {
        const double wPlus = std::sqrt(std::abs(disp_.vPlus[nu]));
        upsilon(nu, nu) = std::exp(iu * disp_.kPlus[nu]) / wPlus;
        upsilon(n + nu, nu) = 1.0 / wPlus;
    }
    for (int mu = 0; mu < n; ++mu) {
        const int nu = piPerm_[mu]; // column (-, mu) holds channel -mu
        const double wMinus = std::sqrt(std::abs(disp_.vMinus[nu]));
        upsilon(nu, n + mu) = std::exp(iu * disp_.kMinus[nu]) / wMinus;
        upsilon(n + nu, n + mu) = 1.0 / wMinus;
    }

    k_ = MatrixXcd::Zero(2 * n, 2 * n);
    k_.topLeftCorner(n, n) = q_ * upsilon.topLeftCorner(n, n);
    k_.topRightCorner(n, n) = q_ * upsilon.topRightCorner(n, n);
    k_.bottomLeftCorner(n, n) = q_ * upsilon.bottomLeftCorner(n, n);
    k_.bottomRightCorner(n, n) = q_ * upsilon.bottomRightCorner(n, n);
    kLu_.compute(k_);

    m0_ = MatrixXcd::Zero(2 * n, 2 * n);
    for (int m = 0; m < 2 * n; ++m) m0_(m, m) = std::exp(iu * slotK_[m]);

    const MatrixXcd s = shiftMatrix(n);
    p_ = MatrixXcd::Identity(n, n) + geom.h2 * std::exp(iu * geom.gamma) * s;
    pStar_ = p_.adjoint();
    pStarLu_.compute(pStar_);
    hPerp_ = geom.h1 * (std::exp(iu * geom.gamma) * s + std::exp(-iu * geom.gamma) * s.adjoint());
}

MatrixXcd WireModel::positionLayer(const LayerDisorder& disorder, double lambda) const {
    const int n = geom_.n;
    if (disorder.v.size() != n) throw ContractError("positionLayer: disorder size mismatch");
    if (lambda < 0.0) throw ContractError("positionLayer: lambda must be >= 0");
    MatrixXcd onsite = geom_.energy * MatrixXcd::Identity(n, n) - hPerp_;
    onsite -= (lambda * disorder.v).asDiagonal().toDenseMatrix().cast<Complex>();
    MatrixXcd t(2 * n, 2 * n);
    t.topLeftCorner(n, n) = pStarLu_.solve(onsite);
    t.topRightCorner(n, n) = -pStarLu_.solve(p_);
    t.bottomLeftCorner(n, n) = MatrixXcd::Identity(n, n);
    t.bottomRightCorner(n, n) = MatrixXcd::Zero(n, n);
    return t;
}

TransferMatrix WireModel::layer(const LayerDisorder& disorder, double lambda) const {
    return TransferMatrix(kLu_.solve(positionLayer(disorder, lambda) * k_));
}

MatrixXcd WireModel::buildR(const LayerDisorder& disorder) const {
    const int n = geom_.n;
    if (disorder.v.size() != n) throw ContractError("buildR: disorder size mismatch");
    const Complex iu(0.0, 1.0);

    // W = diag(|v+|^{-1/2}) Q* V Q diag(|v+|^{-1/2})
    MatrixXcd w = q_.adjoint() * disorder.v.asDiagonal() * q_;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) w(a, b) /= std::sqrt(slotW_[a] * slotW_[b]);

    // The sign of the prefactor follows from the k^+ = right-mover labeling;
    // it is fixed by the exact identity lambda R = K^{-1}(T^l - T^0) K M0^{-1}.
    MatrixXcd r(2 * n, 2 * n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const int pa = piPerm_[a];
            const int pb = piPerm_[b];
            r(a, b) = -iu * w(a, b);
            r(a, n + b) = -iu * w(a, pb);
            r(n + a, b) = iu * w(pa, b);
            r(n + a, n + b) = iu * w(pa, pb);
        }
    return r;
}

MatrixXcd WireModel::rescaledLayer(const LayerDisorder& disorder, double lambda,
                                   const VectorXd& slotPhases) const {
    const int n = geom_.n;
    MatrixXcd z = buildR(disorder);
    for (int a = 0; a < 2 * n; ++a) {
        for (int b = 0; b < 2 * n; ++b) {
            const double phase = slotPhases[b] - slotPhases[a];
            z(a, b) *= std::exp(Complex(0.0, phase));
        }
    }
    return MatrixXcd::Identity(2 * n, 2 * n) + lambda * z;
}

TransferMatrix layer_transfer(const WireGeometry& geom, const LayerDisorder& disorder, double lambda) {
    WireModel model(geom);
    return model.layer(disorder, lambda);
}

MatrixXcd build_R(const WireGeometry& geom, const LayerDisorder& disorder) {
    WireModel model(geom);
    return model.buildR(disorder);
}

namespace {

long microLayerCount(double lambda, double sMax, double maxLayers) {
    const double layers = std::floor(sMax / (lambda * lambda));
    if (layers > maxLayers)
        throw ResourceError("microscopic run would need " + std::to_string(layers) +
                            " layers, above the guard of " + std::to_string(maxLayers));
    return static_cast<long>(layers);
}

} // namespace

MicroPath evolve_A(const WireGeometry& geom, double lambda, double sMax, std::uint64_t seed,
                   int gridPoints, DisorderDistribution dist, double maxLayers) {
    if (lambda < 0.0 || lambda > 0.5) throw ContractError("evolve_A: lambda must lie in [0, 0.5]");
    if (sMax < 0.0) throw ContractError("evolve_A: sMax must be >= 0");
    if (gridPoints < 1) throw ContractError("evolve_A: gridPoints must be >= 1");

    WireModel model(geom);
    const int n = geom.n;
    MicroPath path;
    path.s.reserve(gridPoints + 1);
    path.a.reserve(gridPoints + 1);

    FactoredTransfer acc = FactoredTransfer::identity(n);
    path.s.push_back(0.0);
    path.a.push_back(acc);

    if (lambda == 0.0) {
        // no scattering: every Z-increment vanishes and A stays the identity
        for (int gp = 1; gp <= gridPoints; ++gp) {
            path.s.push_back(gp * sMax / gridPoints);
            path.a.push_back(acc);
        }
        return path;
    }

    const long layers = microLayerCount(lambda, sMax, maxLayers);
    RngStream rng(seed);
    VectorXd phases = VectorXd::Zero(2 * n);
    long done = 0;
    for (int gp = 1; gp <= gridPoints; ++gp) {
        const double sPoint = gp * sMax / gridPoints;
        const long target = std::min<long>(layers, static_cast<long>(std::floor(sPoint / (lambda * lambda))));
        for (; done < target; ++done) {
            for (int m = 0; m < 2 * n; ++m)
                phases[m] = std::remainder(phases[m] + model.slotWavevectors()[m], kTwoPi);
            LayerDisorder v = sample_layer_disorder(n, dist, rng);
            acc.multiplyLeft(TransferMatrix(model.rescaledLayer(v, lambda, phases)));
        }
        path.s.push_back(sPoint);
        path.a.push_back(acc);
    }
    return path;
}

MatrixXcd accumulate_Z(const WireGeometry& geom, double lambda, double s, std::uint64_t seed,
                       DisorderDistribution dist, double maxLayers) {
    if (lambda <= 0.0 || lambda > 0.5) throw ContractError("accumulate_Z: lambda must lie in (0, 0.5]");
    if (s < 0.0) throw ContractError("accumulate_Z: s must be >= 0");
    WireModel model(geom);
    const int n = geom.n;
    const long layers = microLayerCount(lambda, s, maxLayers);
    RngStream rng(seed);
    VectorXd phases = VectorXd::Zero(2 * n);
    MatrixXcd sum = MatrixXcd::Zero(2 * n, 2 * n);
    for (long x = 1; x <= layers; ++x) {
        for (int m = 0; m < 2 * n; ++m)
            phases[m] = std::remainder(phases[m] + model.slotWavevectors()[m], kTwoPi);
        LayerDisorder v = sample_layer_disorder(n, dist, rng);
        MatrixXcd r = model.buildR(v);
        for (int a = 0; a < 2 * n; ++a)
            for (int b = 0; b < 2 * n; ++b)
                sum(a, b) += r(a, b) * std::exp(Complex(0.0, phases[b] - phases[a]));
    }
    return lambda * sum;
}

bool exceptional_entry_pair(int rowA, int colA, int rowB, int colB, int n, bool timeReversal) {
    const int d = 2 * n;
    if (rowA == colA && rowB == colB) return true;
    if (rowA == colB && colA == rowB) return true;
    if (timeReversal && rowB == (rowA + n) % d && colB == (colA + n) % d) return true;
    return false;
}

} // namespace dmpk::micro
