#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "slab/error.hpp"
#include "slab/oracle.hpp"
#include "slab/tensor.hpp"

using namespace slab;

TEST(DenseMatrix, RejectsNonFiniteAndBadLength) {
    EXPECT_THROW(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), Error);
    EXPECT_THROW(DenseMatrix(1, 2, {1.0, NAN}), Error);
    EXPECT_THROW(DenseMatrix(1, 2, {INFINITY, 0.0}), Error);
}

TEST(DenseMatrix, TransposeAndRows) {
    const auto m = DenseMatrix::from_rows({{1, 2, 3}, {4, 5, 6}});
    const auto t = m.transpose();
    EXPECT_EQ(t.rows(), 3u);
    EXPECT_EQ(t(2, 1), 6.0);
    EXPECT_EQ(t.transpose(), m);
    EXPECT_EQ(m.row(1)[0], 4.0);
}

TEST(TopSingularTriplet, RankOneInputIsExact) {
    const auto m = DenseMatrix::from_rows({{2, 4}, {1, 2}});
    const auto t = top_singular_triplet(m);
    EXPECT_NEAR(t.sigma, 5.0, 1e-12);
    const double r5 = std::sqrt(5.0);
    EXPECT_NEAR(t.u[0], 2 / r5, 1e-12);
    EXPECT_NEAR(t.u[1], 1 / r5, 1e-12);
    EXPECT_NEAR(t.v[0], 1 / r5, 1e-12);
    EXPECT_NEAR(t.v[1], 2 / r5, 1e-12);
}

TEST(TopSingularTriplet, ZeroMatrix) {
    const auto t = top_singular_triplet(DenseMatrix(3, 3));
    EXPECT_EQ(t.sigma, 0.0);
    for (double x : t.u) EXPECT_EQ(x, 0.0);
    for (double x : t.v) EXPECT_EQ(x, 0.0);
}

TEST(TopSingularTriplet, MatchesJacobiReference) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = test::random_matrix(16, 12, rng);
        const auto t = top_singular_triplet(m);
        const auto ref = oracle::reference_svd(m);
        EXPECT_LE(std::fabs(t.sigma - ref.sigma[0]), 1e-8 * ref.sigma[0]);
        double diff = 0.0;
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t j = 0; j < 12; ++j) {
                const double e = t.sigma * t.u[i] * t.v[j] - ref.sigma[0] * ref.u(i, 0) * ref.v(j, 0);
                diff += e * e;
            }
        EXPECT_LE(std::sqrt(diff), 1e-6);
    }
}

TEST(TopSingularTriplet, DegenerateSpectrumReportsBestIterate) {
    // Nearly tied leading values: 50 steps cannot separate the directions.
    const auto m = DenseMatrix::from_rows({{1, 0}, {0, 1 - 1e-6}});
    const auto r = power_iterate(m, 1e-10, 50);
    EXPECT_FALSE(r.converged);
    EXPECT_GE(r.triplet.sigma, 1.0 - 1e-6);
    EXPECT_LE(r.triplet.sigma, 1.0 + 1e-12);
    try {
        (void)top_singular_triplet(m, 1e-10, 50);
        FAIL() << "expected degenerate_spectrum";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_spectrum);
    }
}

TEST(TopSingularTriplet, PythagoreanIdentity) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> dim(1, 24);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = test::random_matrix(dim(rng), dim(rng), rng);
        const auto t = top_singular_triplet(m);
        const double n2 = std::pow(frobenius_norm(m), 2);
        DenseMatrix approx(m.rows(), m.cols());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) approx(i, j) = t.sigma * t.u[i] * t.v[j];
        const double r2 = std::pow(frobenius_norm(m - approx), 2);
        EXPECT_LE(r2 + t.sigma * t.sigma, n2 + 1e-6 * n2);
    }
}

TEST(TopSingularTriplet, AbsoluteValueGivesNonNegativeFactors) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> dim(1, 64);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = abs(test::random_matrix(dim(rng), dim(rng), rng));
        const auto t = top_singular_triplet(m);
        for (double x : t.u) EXPECT_GE(x, -1e-12);
        for (double x : t.v) EXPECT_GE(x, -1e-12);
    }
}

TEST(TruncatedSvd, MatchesReferenceSpectrum) {
    std::mt19937_64 rng(8);
    const auto m = test::random_matrix(10, 7, rng);
    const auto svd = truncated_svd(m, 3);
    const auto ref = oracle::reference_svd(m);
    ASSERT_EQ(svd.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(svd[k].sigma, ref.sigma[k], 1e-10 * ref.sigma[0]);
}

TEST(SignMatrix, ZeroMapsToPlusOne) {
    const auto s = sign_matrix(DenseMatrix::from_rows({{0.5, -0.2}, {0, -3}}));
    EXPECT_EQ(s(0, 0), 1);
    EXPECT_EQ(s(0, 1), -1);
    EXPECT_EQ(s(1, 0), 1);
    EXPECT_EQ(s(1, 1), -1);
}

TEST(SignMatrix, AllNegativeAndNegation) {
    std::mt19937_64 rng(2);
    const auto m = test::random_matrix(5, 7, rng);
    const auto neg = -1.0 * m;
    const auto a = sign_matrix(m), b = sign_matrix(neg);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(a(i, j), -b(i, j));
    const auto all_neg = sign_matrix(-1.0 * abs(m));
    EXPECT_EQ(all_neg.bits().popcount(), 0u);
}

TEST(SignMatrix, IdempotentUnderHadamard) {
    std::mt19937_64 rng(4);
    const auto m = test::random_matrix(9, 13, rng);
    const auto s = sign_matrix(hadamard(m, sign_matrix(m)));
    EXPECT_EQ(s.bits().popcount(), 9u * 13u);
}

TEST(Hadamard, Examples) {
    const auto a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
    EXPECT_EQ(hadamard(a, DenseMatrix::from_rows({{2, 0}, {1, -1}})), DenseMatrix::from_rows({{2, 0}, {3, -4}}));
    EXPECT_EQ(hadamard(a, SignMatrix(2, 2)), a);
    EXPECT_EQ(hadamard(a, SignMatrix(BitPlane(2, 2, false))), -1.0 * a);
    EXPECT_THROW(hadamard(a, DenseMatrix(2, 3)), Error);
}

TEST(BitPlane, PackRoundTripAndPadding) {
    std::mt19937_64 rng(6);
    for (std::size_t n : {1u, 7u, 8u, 9u, 63u, 100u}) {
        BitPlane p(1, n);
        std::bernoulli_distribution coin(0.5);
        for (std::size_t i = 0; i < n; ++i) p.set(i, coin(rng));
        std::vector<std::uint8_t> bytes(p.bytes().begin(), p.bytes().end());
        const BitPlane q(1, n, bytes);
        EXPECT_EQ(p, q);
        // Padding bits set by the caller are cleared on adoption.
        bytes.back() |= 0x80;
        if (n % 8) {
            EXPECT_EQ(BitPlane(1, n, bytes), p);
        }
    }
    EXPECT_THROW(BitPlane(3, 3, std::vector<std::uint8_t>(1)), Error);
}

TEST(BitPlane, LsbFirstRowMajor) {
    BitPlane p(2, 5);
    p.set(0, 0, true);
    p.set(1, 2, true);  // flat 7
    ASSERT_EQ(p.bytes().size(), 2u);
    EXPECT_EQ(p.bytes()[0], 0x81);
    EXPECT_EQ(p.bytes()[1], 0x00);
    EXPECT_EQ(p.popcount_row(1), 1u);
}
