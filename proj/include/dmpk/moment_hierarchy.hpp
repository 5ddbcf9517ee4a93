#pragma once

#include <map>
#include <span>
#include <vector>

#include "dmpk/core_linalg.hpp"
#include "dmpk/stats.hpp"

namespace dmpk::moments {

/// gamma_N(beta) = beta / (beta N + 2 - beta).
double gamma_coefficient(const SymmetryClass& cls, int n);

/// Descriptors of the stored conductance moments:
///   Pure p        -> E(g^p)
///   MixedG2 p     -> E(g^{p-1} g^(2))
///   MixedG23 p    -> E(g^{p-2} (g^(2) - g^(3)))
///   HierarchyCombo p -> the full bracket of the hierarchy right-hand side,
///                       estimated trajectory-wise (common random numbers).
enum class MomentKind { Pure, MixedG2, MixedG23, HierarchyCombo };

struct MomentKey {
    MomentKind kind;
    int p;
    auto operator<=>(const MomentKey&) const = default;
};

struct MomentEntry {
    double estimate = 0.0;
    double stdErr = 0.0;
    std::size_t nSamples = 0;
};

/// Monte Carlo moment estimates at one macroscopic length.
struct MomentTable {
    double s = 0.0;
    int n = 0;
    SymmetryClass cls{2};
    std::map<MomentKey, MomentEntry> entries;

    const MomentEntry& at(MomentKind kind, int p) const;
    bool has(MomentKind kind, int p) const;
};

/// Build all moments with p <= pMax (pure moments up to pMax+1) from
/// per-trajectory samples of g, g^(2) = sum T^2 and g^(3) = sum T^3.
MomentTable build_moment_table(const SymmetryClass& cls, int n, double s, int pMax,
                               std::span<const double> g, std::span<const double> g2,
                               std::span<const double> g3);

/// Right-hand side of d/ds E(g^p) from Ito's formula:
/// -p gamma_N [E(g^{p+1}) - (1-2/beta) E(g^{p-1} g^(2))
///             - 2(p-1)/beta E(g^{p-2}(g^(2)-g^(3)))],
/// with standard error from the trajectory-wise combination when present.
std::pair<double, double> hierarchy_rhs(int p, const SymmetryClass& cls, int n,
                                        const MomentTable& moments);

/// The unique limit of the moment hierarchy: Psi(p, s) = (1+s)^{-p}.
double limiting_psi(int p, double s);

/// Picard iterates of the limiting hierarchy on a window-partitioned
/// interval, each iterate an exactly-integrated polynomial in s.
class PsiTable {
public:
    int pMax() const { return pMax_; }
    double sMax() const { return sMax_; }
    const std::vector<double>& grid() const { return grid_; }
    /// Value at grid index i.
    double value(int p, int gridIndex) const;
    /// Value anywhere in [0, sMax] from the window polynomials.
    double psi(int p, double s) const;
    /// Local polynomial coefficients of window w for moment order p.
    const std::vector<double>& windowCoefficients(int w, int p) const;
    int windowCount() const { return static_cast<int>(windows_.size()); }
    double windowLength() const { return windowLength_; }

private:
    friend PsiTable picard_solve(int, double, int, int, int);
    int pMax_ = 0;
    double sMax_ = 0.0;
    double windowLength_ = 0.0;
    std::vector<double> grid_;
    std::vector<std::vector<double>> values_;             // [p-1][gridIndex]
    std::vector<std::vector<std::vector<double>>> windows_; // [w][p-1][coeff]
};

/// Iterate Psi_{k+1}(p, s) = 1 - p int_0^s Psi_k(p+1, t) dt from Psi_0 = 1,
/// closing the hierarchy at pMax+1 (frozen at its window-start value, warm
/// start 1). windowCount = 0 picks ceil(sMax / 0.125) windows; with a single
/// window, iterate k is the order-k Taylor polynomial of (1+s)^{-p} for
/// every p <= pMax - k + 1.
PsiTable picard_solve(int pMax, double sMax, int iterations, int windowCount = 0,
                      int gridPoints = 64);

} // namespace dmpk::moments
