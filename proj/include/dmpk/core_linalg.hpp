#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "dmpk/errors.hpp"

namespace dmpk {

using Complex = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXd = Eigen::VectorXd;

/// Dyson symmetry index. beta=1 (time-reversal invariant), beta=2 (broken
/// time reversal), beta=4 (symplectic, eigenvalue process only).
struct SymmetryClass {
    int beta;

    explicit SymmetryClass(int b) : beta(b) {
        if (b != 1 && b != 2 && b != 4)
            throw UnsupportedClassError("symmetry index beta must be 1, 2 or 4, got " + std::to_string(b));
    }
};

enum class BlockSign { Plus, Minus };

/// 2N x 2N complex matrix in the channel basis with (sigma, sigma') in
/// {+,-}^2 block addressing. Row/column i in [0,N) is (+, channel i),
/// i in [N,2N) is (-, channel i-N); channels are residues mod N.
struct TransferMatrix {
    MatrixXcd m;

    TransferMatrix() = default;
    explicit TransferMatrix(MatrixXcd mat) : m(std::move(mat)) {
        checkShape(m);
    }

    int n() const { return static_cast<int>(m.rows()) / 2; }

    static TransferMatrix identity(int n) {
        return TransferMatrix(MatrixXcd::Identity(2 * n, 2 * n));
    }

    Eigen::Block<MatrixXcd> block(BlockSign row, BlockSign col) {
        const int N = n();
        return m.block(row == BlockSign::Plus ? 0 : N, col == BlockSign::Plus ? 0 : N, N, N);
    }
    Eigen::Block<const MatrixXcd> block(BlockSign row, BlockSign col) const {
        const int N = n();
        return m.block(row == BlockSign::Plus ? 0 : N, col == BlockSign::Plus ? 0 : N, N, N);
    }

    static void checkShape(const MatrixXcd& mat) {
        if (mat.rows() != mat.cols())
            throw DimensionError("transfer matrix must be square");
        if (mat.rows() % 2 != 0 || mat.rows() == 0)
            throw DimensionError("transfer matrix must have even dimension 2N");
    }
};

/// Defect tolerance for group-membership checks, scaling with the
/// floating-point error accumulated over N channels.
inline double groupTolerance(int n) { return 1e-10 * n; }

/// Sigma_z = diag(1, -1) blockwise.
MatrixXcd sigmaZ(int n);
/// Sigma_x = off-diagonal identity blocks.
MatrixXcd sigmaX(int n);

/// || M* Sigma_z M - Sigma_z ||_F. Zero (up to fp) iff M is pseudo-unitary.
double pseudo_unitarity_defect(const TransferMatrix& m);

/// || Sigma_x M Sigma_x - conj(M) ||_F. Zero iff M is time reversal invariant.
double time_reversal_defect(const TransferMatrix& m);

/// Transmission eigenvalues T_k = sigma_k(M_++)^{-2}, sorted descending,
/// and the Landauer conductance g = sum_k T_k.
struct TransmissionSpectrum {
    VectorXd t;
    double g = 0.0;
};

TransmissionSpectrum transmission_spectrum(const TransferMatrix& m);

/// Stabilized representation of a long product of transfer matrices:
/// product = qFactor * diag(exp(logScale)) * rFactor * pending-tail,
/// with qFactor unitary, rFactor unit-diagonal upper triangular and the
/// magnitudes kept in logScale so arbitrarily long products never overflow.
/// Up to reorthPeriod recent layers are held as a plain product before
/// being folded in by column orthogonalization.
class FactoredTransfer {
public:
    static constexpr int kDefaultReorthPeriod = 16;

    static FactoredTransfer identity(int n, int reorthPeriod = kDefaultReorthPeriod);

    int n() const { return static_cast<int>(qFactor_.rows()) / 2; }
    int reorthPeriod() const { return reorthPeriod_; }

    const MatrixXcd& qFactor() const { return qFactor_; }
    const MatrixXcd& rFactor() const { return rFactor_; }
    const VectorXd& logScale() const { return logScale_; }

    /// Left-multiply by one more layer. Folds the pending window into the
    /// factored form every reorthPeriod calls.
    void multiplyLeft(const TransferMatrix& layer);

    /// Fold any pending layers into (Q, logScale, R).
    void flush();

    bool hasPending() const { return pendingCount_ > 0; }

private:
    FactoredTransfer() = default;

    MatrixXcd qFactor_;
    MatrixXcd rFactor_;
    VectorXd logScale_;
    MatrixXcd pending_;
    int pendingCount_ = 0;
    int reorthPeriod_ = kDefaultReorthPeriod;
};

/// Functional form of FactoredTransfer::multiplyLeft.
FactoredTransfer stabilized_multiply(FactoredTransfer acc, const TransferMatrix& layer);

/// Dense reconstruction qFactor * diag(exp(logScale)) * rFactor (pending
/// folded in first). Overflows for products whose scales exceed double
/// range; use the FactoredTransfer spectrum path for those.
TransferMatrix reconstruct(const FactoredTransfer& f);

/// Transmission spectrum extracted in log space from the factored form;
/// never overflows regardless of product length.
TransmissionSpectrum transmission_spectrum(const FactoredTransfer& f);

} // namespace dmpk
