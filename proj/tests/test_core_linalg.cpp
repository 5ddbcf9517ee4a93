#include <doctest.h>

#include <cmath>

#include "dmpk/core_linalg.hpp"
#include "test_support.hpp"

using namespace dmpk;
using dmpk::testing::randomGroupElement;
using dmpk::testing::randomUnitary;

TEST_CASE("pseudo-unitarity defect on reference matrices") {
    CHECK(pseudo_unitarity_defect(TransferMatrix::identity(1)) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(pseudo_unitarity_defect(TransferMatrix::identity(4)) == doctest::Approx(0.0).epsilon(1e-14));

    const double r = 0.7;
    MatrixXcd hyp(2, 2);
    hyp << std::cosh(r), std::sinh(r), std::sinh(r), std::cosh(r);
    CHECK(pseudo_unitarity_defect(TransferMatrix(hyp)) < 1e-14);

    // M = 2*Id: M* Sigma_z M - Sigma_z = 3 Sigma_z, Frobenius norm 3*sqrt(2)
    CHECK(pseudo_unitarity_defect(TransferMatrix(2.0 * MatrixXcd::Identity(2, 2))) ==
          doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("time-reversal defect on reference matrices") {
    CHECK(time_reversal_defect(TransferMatrix::identity(2)) == doctest::Approx(0.0));

    const double r = 0.7;
    MatrixXcd hyp(2, 2);
    hyp << std::cosh(r), std::sinh(r), std::sinh(r), std::cosh(r);
    CHECK(time_reversal_defect(TransferMatrix(hyp)) < 1e-14);

    // diag(e^{i theta}, e^{i theta}): defect = 2 |sin theta| sqrt(2)
    const double theta = M_PI / 4.0;
    MatrixXcd d = MatrixXcd::Identity(2, 2) * std::exp(Complex(0.0, theta));
    CHECK(time_reversal_defect(TransferMatrix(d)) == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("shape errors") {
    MatrixXcd odd = MatrixXcd::Identity(3, 3);
    CHECK_THROWS_AS(TransferMatrix{odd}, DimensionError);
    MatrixXcd rect = MatrixXcd::Zero(2, 4);
    CHECK_THROWS_AS(TransferMatrix{rect}, DimensionError);
}

TEST_CASE("transmission spectrum of reference matrices") {
    auto id = transmission_spectrum(TransferMatrix::identity(3));
    CHECK(id.g == doctest::Approx(3.0).epsilon(1e-14));
    for (int k = 0; k < 3; ++k) CHECK(id.t[k] == doctest::Approx(1.0).epsilon(1e-14));

    // cosh r = sqrt(2): T = 1/cosh^2 r = 1/2
    const double r = std::acosh(std::sqrt(2.0));
    MatrixXcd hyp(2, 2);
    hyp << std::cosh(r), std::sinh(r), std::sinh(r), std::cosh(r);
    auto sp = transmission_spectrum(TransferMatrix(hyp));
    CHECK(sp.t[0] == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(sp.g == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("transmission spectrum rejects non-members and non-finite input") {
    CHECK_THROWS_AS(transmission_spectrum(TransferMatrix(0.5 * MatrixXcd::Identity(2, 2))),
                    GroupMembershipError);
    MatrixXcd bad = MatrixXcd::Identity(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(transmission_spectrum(TransferMatrix(bad)), NumericError);
}

TEST_CASE("transmission spectrum invariant under block-diagonal unitaries") {
    RngStream rng(31415);
    for (int rep = 0; rep < 5; ++rep) {
        const int n = 3;
        TransferMatrix m = randomGroupElement(n, rng);
        MatrixXcd w = MatrixXcd::Zero(2 * n, 2 * n);
        w.topLeftCorner(n, n) = randomUnitary(n, rng);
        w.bottomRightCorner(n, n) = randomUnitary(n, rng);
        MatrixXcd v = MatrixXcd::Zero(2 * n, 2 * n);
        v.topLeftCorner(n, n) = randomUnitary(n, rng);
        v.bottomRightCorner(n, n) = randomUnitary(n, rng);
        auto a = transmission_spectrum(m);
        auto b = transmission_spectrum(TransferMatrix(w * m.m * v));
        for (int k = 0; k < n; ++k) CHECK(a.t[k] == doctest::Approx(b.t[k]).epsilon(1e-10));
    }
}

TEST_CASE("group closure under products (statistical)") {
    RngStream rng(777);
    for (int rep = 0; rep < 50; ++rep) {
        TransferMatrix m1 = randomGroupElement(3, rng);
        TransferMatrix m2 = randomGroupElement(3, rng);
        const double scale = m1.m.norm() * m2.m.norm();
        CHECK(pseudo_unitarity_defect(TransferMatrix(m2.m * m1.m)) < 1e-12 * scale * scale);
    }
}

TEST_CASE("stabilized product of identities stays the identity") {
    auto acc = FactoredTransfer::identity(2);
    for (int i = 0; i < 1000; ++i) acc = stabilized_multiply(acc, TransferMatrix::identity(2));
    acc.flush();
    CHECK(acc.logScale().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((reconstruct(acc).m - MatrixXcd::Identity(4, 4)).norm() < 1e-10);
}

TEST_CASE("stabilized product tracks huge scales in log space") {
    MatrixXcd d = MatrixXcd::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 0.5;
    auto acc = FactoredTransfer::identity(1);
    for (int i = 0; i < 200; ++i) acc.multiplyLeft(TransferMatrix(d));
    acc.flush();
    CHECK(acc.logScale()[0] == doctest::Approx(200.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(acc.logScale()[1] == doctest::Approx(-200.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(acc.qFactor().cwiseAbs().maxCoeff() < 2.0);
    CHECK(acc.rFactor().cwiseAbs().maxCoeff() < 2.0);
}

TEST_CASE("single stabilized multiply equals the plain product") {
    RngStream rng(99);
    TransferMatrix m = randomGroupElement(3, rng);
    TransferMatrix layer = randomGroupElement(3, rng);
    auto acc = FactoredTransfer::identity(3);
    acc.multiplyLeft(m);
    acc.multiplyLeft(layer);
    MatrixXcd direct = layer.m * m.m;
    CHECK((reconstruct(acc).m - direct).norm() < 1e-12 * direct.norm());
}

TEST_CASE("raw and factored spectra agree on long products") {
    RngStream rng(2024);
    const int n = 4;
    auto acc = FactoredTransfer::identity(n);
    MatrixXcd raw = MatrixXcd::Identity(2 * n, 2 * n);
    for (int i = 0; i < 2000; ++i) {
        TransferMatrix layer = randomGroupElement(n, rng, 0.02);
        raw = layer.m * raw;
        acc.multiplyLeft(layer);
    }
    auto a = transmission_spectrum(TransferMatrix(raw));
    auto b = transmission_spectrum(acc);
    for (int k = 0; k < n; ++k)
        CHECK(b.t[k] == doctest::Approx(a.t[k]).epsilon(1e-8));
    // reconstruction stays faithful as long as scales fit in doubles
    CHECK((reconstruct(acc).m - raw).norm() < 1e-8 * raw.norm());
}

TEST_CASE("factored spectrum survives scales far past double overflow") {
    // 4000 layers of diag growth e^{0.5} per layer: top scale e^{2000}
    const int n = 1;
    MatrixXcd d = MatrixXcd::Zero(2, 2);
    d(0, 0) = std::exp(0.5);
    d(1, 1) = std::exp(-0.5);
    auto acc = FactoredTransfer::identity(n);
    for (int i = 0; i < 4000; ++i) acc.multiplyLeft(TransferMatrix(d));
    auto sp = transmission_spectrum(acc);
    CHECK(sp.t[0] > 0.0);
    CHECK(sp.t[0] <= 1e-300 * 1.001); // clamped positivity floor
}
