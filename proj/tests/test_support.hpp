#pragma once

#include <Eigen/QR>
#include <cmath>

#include "dmpk/core_linalg.hpp"
#include "dmpk/rng.hpp"

namespace dmpk::testing {

/// Haar-ish random unitary from the QR of a complex Gaussian matrix.
inline MatrixXcd randomUnitary(int n, RngStream& rng) {
    MatrixXcd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.complexNormal();
    Eigen::HouseholderQR<MatrixXcd> qr(g);
    MatrixXcd q = qr.householderQ();
    MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i) {
        const Complex d = r(i, i);
        q.col(i) *= std::abs(d) == 0.0 ? Complex(1.0) : d / std::abs(d);
    }
    return q;
}

/// Hyperbolic group element [[cosh r, sinh r], [sinh r, cosh r]] with
/// diagonal radial parts r_k >= 0.
inline MatrixXcd hyperbolicElement(const VectorXd& r) {
    const int n = static_cast<int>(r.size());
    MatrixXcd m = MatrixXcd::Zero(2 * n, 2 * n);
    for (int k = 0; k < n; ++k) {
        m(k, k) = std::cosh(r[k]);
        m(n + k, n + k) = std::cosh(r[k]);
        m(k, n + k) = std::sinh(r[k]);
        m(n + k, k) = std::sinh(r[k]);
    }
    return m;
}

/// Random pseudo-unitary matrix diag(W+,W-) H(r) diag(V+,V-).
inline TransferMatrix randomGroupElement(int n, RngStream& rng, double rScale = 1.0) {
    VectorXd r(n);
    for (int k = 0; k < n; ++k) r[k] = rScale * std::abs(rng.normal());
    MatrixXcd m = MatrixXcd::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n) = randomUnitary(n, rng);
    m.bottomRightCorner(n, n) = randomUnitary(n, rng);
    MatrixXcd v = MatrixXcd::Zero(2 * n, 2 * n);
    v.topLeftCorner(n, n) = randomUnitary(n, rng);
    v.bottomRightCorner(n, n) = randomUnitary(n, rng);
    return TransferMatrix(m * hyperbolicElement(r) * v);
}

} // namespace dmpk::testing
