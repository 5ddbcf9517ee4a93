#include "dmpk/core_linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace dmpk {

namespace {

void requireFinite(const MatrixXcd& m, const char* who) {
    if (!m.allFinite())
        throw NumericError(std::string(who) + ": non-finite matrix entries");
}

// Clamp sigma(M_++) >= 1 up to the group tolerance and map to T = sigma^{-2}.
// logSigma is log(sigma_k).
VectorXd transmissionFromLogSigmas(VectorXd logSigma, int n) {
    const double slack = groupTolerance(n);
    // sigma >= 1 - slack  <=>  logSigma >= log(1 - slack) ~ -slack
    const double logFloor = std::log1p(-slack);
    VectorXd t(n);
    for (int k = 0; k < n; ++k) {
        if (std::isnan(logSigma[k]))
            throw NumericError("transmission_spectrum: NaN singular value");
        if (logSigma[k] < logFloor)
            throw GroupMembershipError(
                "transmission_spectrum: singular value of M_++ below 1 - tol_group "
                "(sigma = " + std::to_string(std::exp(logSigma[k])) + ")");
        const double logT = -2.0 * logSigma[k];
        double val = logT >= 0.0 ? 1.0 : std::exp(logT);
        // keep T strictly positive even past double underflow
        t[k] = std::max(val, 1e-300);
    }
    std::sort(t.data(), t.data() + n, std::greater<double>());
    return t;
}

} // namespace

MatrixXcd sigmaZ(int n) {
    MatrixXcd s = MatrixXcd::Zero(2 * n, 2 * n);
    s.topLeftCorner(n, n) = MatrixXcd::Identity(n, n);
    s.bottomRightCorner(n, n) = -MatrixXcd::Identity(n, n);
    return s;
}

MatrixXcd sigmaX(int n) {
    MatrixXcd s = MatrixXcd::Zero(2 * n, 2 * n);
    s.topRightCorner(n, n) = MatrixXcd::Identity(n, n);
    s.bottomLeftCorner(n, n) = MatrixXcd::Identity(n, n);
    return s;
}

double pseudo_unitarity_defect(const TransferMatrix& m) {
    TransferMatrix::checkShape(m.m);
    const int n = m.n();
    MatrixXcd d = m.m.adjoint() * sigmaZ(n) * m.m - sigmaZ(n);
    return d.norm();
}

double time_reversal_defect(const TransferMatrix& m) {
    TransferMatrix::checkShape(m.m);
    const int n = m.n();
    MatrixXcd d = sigmaX(n) * m.m * sigmaX(n) - m.m.conjugate();
    return d.norm();
}

TransmissionSpectrum transmission_spectrum(const TransferMatrix& m) {
    TransferMatrix::checkShape(m.m);
    requireFinite(m.m, "transmission_spectrum");
    const int n = m.n();
    Eigen::JacobiSVD<MatrixXcd> svd(m.block(BlockSign::Plus, BlockSign::Plus));
    VectorXd logSigma(n);
    for (int k = 0; k < n; ++k) logSigma[k] = std::log(svd.singularValues()[k]);
    TransmissionSpectrum out;
    out.t = transmissionFromLogSigmas(std::move(logSigma), n);
    out.g = out.t.sum();
    return out;
}

FactoredTransfer FactoredTransfer::identity(int n, int reorthPeriod) {
    if (n < 1) throw DimensionError("FactoredTransfer: channel count must be >= 1");
    if (reorthPeriod < 1) throw ContractError("FactoredTransfer: reorthPeriod must be >= 1");
    FactoredTransfer f;
    f.qFactor_ = MatrixXcd::Identity(2 * n, 2 * n);
    f.rFactor_ = MatrixXcd::Identity(2 * n, 2 * n);
    f.logScale_ = VectorXd::Zero(2 * n);
    f.pending_ = MatrixXcd::Identity(2 * n, 2 * n);
    f.pendingCount_ = 0;
    f.reorthPeriod_ = reorthPeriod;
    return f;
}

void FactoredTransfer::multiplyLeft(const TransferMatrix& layer) {
    if (layer.n() != n())
        throw DimensionError("stabilized_multiply: layer dimension mismatch");
    requireFinite(layer.m, "stabilized_multiply");
    pending_ = layer.m * pending_;
    if (++pendingCount_ >= reorthPeriod_) flush();
}

void FactoredTransfer::flush() {
    if (pendingCount_ == 0) return;
    const int d = static_cast<int>(qFactor_.rows());

    MatrixXcd b = pending_ * qFactor_;
    Eigen::HouseholderQR<MatrixXcd> qr(b);
    MatrixXcd qNew = qr.householderQ();
    MatrixXcd rNew = qr.matrixQR().triangularView<Eigen::Upper>();

    // Make the R diagonal real positive by absorbing phases into Q.
    for (int i = 0; i < d; ++i) {
        const Complex rii = rNew(i, i);
        const double mag = std::abs(rii);
        if (mag == 0.0)
            throw NumericError("stabilized_multiply: rank-deficient window product");
        const Complex phase = rii / mag;
        qNew.col(i) *= phase;
        rNew.row(i) *= std::conj(phase);
    }

    // Merge rNew * diag(exp(logScale)) into a new scale vector and a
    // unit-diagonal triangular factor; the exp argument is <= O(1) whenever
    // the scales stay sorted, which the dynamics maintains.
    VectorXd logNew(d);
    MatrixXcd u = MatrixXcd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        const double rii = rNew(i, i).real();
        logNew[i] = logScale_[i] + std::log(rii);
        u(i, i) = 1.0;
        for (int j = i + 1; j < d; ++j)
            u(i, j) = (rNew(i, j) / rii) * std::exp(logScale_[j] - logScale_[i]);
    }

    rFactor_ = (u * rFactor_).triangularView<Eigen::Upper>();
    qFactor_ = std::move(qNew);
    logScale_ = std::move(logNew);
    pending_ = MatrixXcd::Identity(d, d);
    pendingCount_ = 0;

    if (!logScale_.allFinite() || !rFactor_.allFinite())
        throw NumericError("stabilized_multiply: non-finite factored state");
}

FactoredTransfer stabilized_multiply(FactoredTransfer acc, const TransferMatrix& layer) {
    acc.multiplyLeft(layer);
    return acc;
}

TransferMatrix reconstruct(const FactoredTransfer& f) {
    FactoredTransfer c = f;
    c.flush();
    MatrixXcd scaled = c.logScale().array().exp().matrix().asDiagonal() * c.rFactor();
    return TransferMatrix(c.qFactor() * scaled);
}

TransmissionSpectrum transmission_spectrum(const FactoredTransfer& f) {
    FactoredTransfer c = f;
    c.flush();
    const int n = c.n();

    // M_++ = Q[0:N,0:N] * diag(exp(logScale[0:N])) * R[0:N,0:N]; the lower
    // rows of diag*R vanish on the first N columns because R is triangular.
    // Work with a global log shift so the scaled matrix stays in range.
    VectorXd d = c.logScale().head(n);
    const double shift = d.maxCoeff() > 280.0 ? d.maxCoeff() - 280.0 : 0.0;

    MatrixXcd scaledR = c.rFactor().topLeftCorner(n, n);
    for (int i = 0; i < n; ++i) scaledR.row(i) *= std::exp(d[i] - shift);
    MatrixXcd mpp = c.qFactor().topLeftCorner(n, n) * scaledR;
    requireFinite(mpp, "transmission_spectrum(factored)");

    Eigen::JacobiSVD<MatrixXcd> svd(mpp);
    VectorXd logSigma(n);
    for (int k = 0; k < n; ++k) logSigma[k] = std::log(svd.singularValues()[k]) + shift;

    TransmissionSpectrum out;
    out.t = transmissionFromLogSigmas(std::move(logSigma), n);
    out.g = out.t.sum();
    return out;
}

} // namespace dmpk
