#include "dmpk/moment_hierarchy.hpp"

#include <algorithm>
#include <cmath>

namespace dmpk::moments {

double gamma_coefficient(const SymmetryClass& cls, int n) {
    if (n < 1) throw ContractError("gamma_coefficient: n must be >= 1");
    return cls.beta / (cls.beta * n + 2.0 - cls.beta);
}

const MomentEntry& MomentTable::at(MomentKind kind, int p) const {
    auto it = entries.find(MomentKey{kind, p});
    if (it == entries.end())
        throw ContractError("MomentTable: missing moment (kind=" +
                            std::to_string(static_cast<int>(kind)) + ", p=" + std::to_string(p) + ")");
    return it->second;
}

bool MomentTable::has(MomentKind kind, int p) const {
    return entries.count(MomentKey{kind, p}) > 0;
}

MomentTable build_moment_table(const SymmetryClass& cls, int n, double s, int pMax,
                               std::span<const double> g, std::span<const double> g2,
                               std::span<const double> g3) {
    if (g.size() != g2.size() || g.size() != g3.size())
        throw ContractError("build_moment_table: sample vectors differ in length");
    MomentTable table;
    table.s = s;
    table.n = n;
    table.cls = cls;

    const std::size_t count = g.size();
    std::vector<double> work(count);
    auto put = [&](MomentKind kind, int p) {
        auto st = stats::mc_estimate(work, "moment");
        table.entries[MomentKey{kind, p}] = MomentEntry{st.mean, st.meanStdErr, st.nSamples};
    };

    for (int p = 1; p <= pMax + 1; ++p) {
        for (std::size_t i = 0; i < count; ++i) work[i] = std::pow(g[i], p);
        put(MomentKind::Pure, p);
    }
    for (int p = 1; p <= pMax; ++p) {
        for (std::size_t i = 0; i < count; ++i) work[i] = std::pow(g[i], p - 1) * g2[i];
        put(MomentKind::MixedG2, p);
        for (std::size_t i = 0; i < count; ++i)
            work[i] = p >= 2 ? std::pow(g[i], p - 2) * (g2[i] - g3[i]) : 0.0;
        put(MomentKind::MixedG23, p);

        const double c2 = 1.0 - 2.0 / cls.beta;
        const double c3 = 2.0 * (p - 1) / cls.beta;
        for (std::size_t i = 0; i < count; ++i) {
            double x = std::pow(g[i], p + 1);
            if (c2 != 0.0) x -= c2 * std::pow(g[i], p - 1) * g2[i];
            if (c3 != 0.0) x -= c3 * std::pow(g[i], p - 2) * (g2[i] - g3[i]);
            work[i] = x;
        }
        put(MomentKind::HierarchyCombo, p);
    }
    return table;
}

std::pair<double, double> hierarchy_rhs(int p, const SymmetryClass& cls, int n,
                                        const MomentTable& moments) {
    if (p < 1) throw ContractError("hierarchy_rhs: p must be >= 1");
    const double gamma = gamma_coefficient(cls, n);

    if (moments.has(MomentKind::HierarchyCombo, p)) {
        const MomentEntry& combo = moments.at(MomentKind::HierarchyCombo, p);
        return {-p * gamma * combo.estimate, p * gamma * combo.stdErr};
    }

    const double c2 = 1.0 - 2.0 / cls.beta;
    const double c3 = 2.0 * (p - 1) / cls.beta;
    const MomentEntry& top = moments.at(MomentKind::Pure, p + 1);
    double est = top.estimate;
    double var = top.stdErr * top.stdErr;
    if (c2 != 0.0) {
        const MomentEntry& mid = moments.at(MomentKind::MixedG2, p);
        est -= c2 * mid.estimate;
        var += c2 * c2 * mid.stdErr * mid.stdErr;
    }
    if (c3 != 0.0) {
        const MomentEntry& last = moments.at(MomentKind::MixedG23, p);
        est -= c3 * last.estimate;
        var += c3 * c3 * last.stdErr * last.stdErr;
    }
    return {-p * gamma * est, p * gamma * std::sqrt(var)};
}

double limiting_psi(int p, double s) {
    if (p < 1) throw ContractError("limiting_psi: p must be >= 1");
    if (s < 0.0) throw ContractError("limiting_psi: s must be >= 0");
    return std::pow(1.0 + s, -p);
}

double PsiTable::value(int p, int gridIndex) const {
    if (p < 1 || p > pMax_) throw ContractError("PsiTable::value: p out of range");
    return values_.at(p - 1).at(gridIndex);
}

double PsiTable::psi(int p, double s) const {
    if (p < 1 || p > pMax_) throw ContractError("PsiTable::psi: p out of range");
    if (s < 0.0 || s > sMax_ * (1.0 + 1e-12)) throw ContractError("PsiTable::psi: s out of range");
    int w = windowLength_ > 0.0 ? static_cast<int>(s / windowLength_) : 0;
    w = std::min<int>(w, static_cast<int>(windows_.size()) - 1);
    const double t = s - w * windowLength_;
    const std::vector<double>& c = windows_[w][p - 1];
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    return acc;
}

const std::vector<double>& PsiTable::windowCoefficients(int w, int p) const {
    return windows_.at(w).at(p - 1);
}

PsiTable picard_solve(int pMax, double sMax, int iterations, int windowCount, int gridPoints) {
    if (pMax < 1) throw ContractError("picard_solve: pMax must be >= 1");
    if (iterations < 0) throw ContractError("picard_solve: iterations must be >= 0");
    if (!(sMax > 0.0)) throw ContractError("picard_solve: sMax must be > 0");
    if (sMax > 0.9)
        throw std::domain_error(
            "picard_solve: sMax must be <= 0.9; the contraction bound of the uniqueness "
            "argument only covers window lengths below 1");
    if (gridPoints < 1) throw ContractError("picard_solve: gridPoints must be >= 1");
    if (windowCount <= 0) windowCount = static_cast<int>(std::ceil(sMax / 0.125));

    PsiTable table;
    table.pMax_ = pMax;
    table.sMax_ = sMax;
    table.windowLength_ = sMax / windowCount;
    const double delta = table.windowLength_;

    // leftVals[p-1] for p = 1..pMax+1; the closure level pMax+1 stays frozen.
    std::vector<double> leftVals(pMax + 1, 1.0);
    table.windows_.reserve(windowCount);

    for (int w = 0; w < windowCount; ++w) {
        // iterate polynomials in the window-local variable t
        std::vector<std::vector<double>> cur(pMax + 1), next(pMax + 1);
        for (int p = 1; p <= pMax + 1; ++p) cur[p - 1] = {leftVals[p - 1]};

        for (int it = 0; it < iterations; ++it) {
            for (int p = 1; p <= pMax; ++p) {
                const std::vector<double>& src = cur[p]; // level p+1
                std::vector<double>& dst = next[p - 1];
                dst.assign(src.size() + 1, 0.0);
                dst[0] = leftVals[p - 1];
                for (std::size_t j = 0; j < src.size(); ++j)
                    dst[j + 1] = -p * src[j] / static_cast<double>(j + 1);
            }
            next[pMax] = {leftVals[pMax]}; // frozen closure
            std::swap(cur, next);
        }

        cur.resize(pMax); // drop the closure level from the stored window
        table.windows_.push_back(cur);

        for (int p = 1; p <= pMax; ++p) {
            const std::vector<double>& c = cur[p - 1];
            double acc = 0.0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * delta + *it;
            leftVals[p - 1] = acc;
        }
    }

    table.grid_.resize(gridPoints + 1);
    table.values_.assign(pMax, std::vector<double>(gridPoints + 1, 0.0));
    for (int i = 0; i <= gridPoints; ++i) {
        const double s = sMax * i / gridPoints;
        table.grid_[i] = s;
        for (int p = 1; p <= pMax; ++p) table.values_[p - 1][i] = table.psi(p, s);
    }
    return table;
}

} // namespace dmpk::moments
