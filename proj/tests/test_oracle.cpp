#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "helpers.hpp"
#include "slab/oracle.hpp"

using namespace slab;
using namespace slab::oracle;

TEST(TwoLevel, SmallExamples) {
    const std::vector<double> w{1, 2, 4};
    const auto s = best_two_level_split(w);
    EXPECT_DOUBLE_EQ(s.a, 1.5);
    EXPECT_DOUBLE_EQ(s.b, 4.0);
    EXPECT_EQ(s.t, 1u);
    EXPECT_DOUBLE_EQ(s.objective, 0.5);
    EXPECT_TRUE(s.midpoint_ok);

    const auto c = best_two_level_split(std::vector<double>{2.5, 2.5, 2.5, 2.5});
    EXPECT_EQ(c.a, 2.5);
    EXPECT_EQ(c.b, 2.5);
    EXPECT_EQ(c.objective, 0.0);

    const auto pm = best_two_level_split(std::vector<double>{-1, 1});
    EXPECT_EQ(pm.a, -1.0);
    EXPECT_EQ(pm.b, 1.0);
    EXPECT_EQ(pm.objective, 0.0);

    EXPECT_THROW(best_two_level_split(std::vector<double>{1}), std::invalid_argument);
    EXPECT_THROW(best_two_level_split(std::vector<double>{2, 1}), std::invalid_argument);
}

TEST(TwoLevel, ExhaustiveExamples) {
    const auto s = best_two_level_exhaustive(std::vector<double>{0, 0, 1, 1});
    EXPECT_EQ(s.a, 0.0);
    EXPECT_EQ(s.b, 1.0);
    EXPECT_EQ(s.objective, 0.0);
    EXPECT_EQ(best_two_level_exhaustive(std::vector<double>{3, 3, 3}).objective, 0.0);
    EXPECT_THROW(best_two_level_exhaustive(std::vector<double>(13, 1.0)), std::invalid_argument);
}

TEST(TwoLevel, ObjectiveIsIndependentOfSearch) {
    const std::vector<double> w{-2, 0.5, 3};
    EXPECT_DOUBLE_EQ(two_level_objective(w, -2, 1.75), 0.0 + 1.5625 + 1.5625);
}

TEST(TwoLevel, SplitMatchesEnumeration) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> n(2, 12);
    std::normal_distribution<double> d(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> w(n(rng));
        for (auto& x : w) x = d(rng);
        std::sort(w.begin(), w.end());
        const auto a = best_two_level_split(w), b = best_two_level_exhaustive(w);
        EXPECT_NEAR(a.objective, b.objective, 1e-12);
        EXPECT_TRUE(a.midpoint_ok);
    }
}

TEST(SymmetricLevels, NormalShiftAndExponential) {
    EXPECT_LT(symmetric_levels_check(10000, 20, 1), 0.05);
    EXPECT_LT(symmetric_levels_check(10000, 20, 1, Distribution::normal, 7.5), 0.05);
    EXPECT_GT(symmetric_levels_check(10000, 20, 1, Distribution::exponential), 0.05);
    EXPECT_THROW(symmetric_levels_check(50, 1, 1), std::invalid_argument);
}

TEST(ReferenceSvd, Diagonal) {
    const auto s = reference_svd(DenseMatrix::from_rows({{3, 0, 0}, {0, 2, 0}, {0, 0, 1}}));
    EXPECT_NEAR(s.sigma[0], 3, 1e-14);
    EXPECT_NEAR(s.sigma[1], 2, 1e-14);
    EXPECT_NEAR(s.sigma[2], 1, 1e-14);
}

TEST(ReferenceSvd, OrthogonalMatrix) {
    const double c = std::cos(0.7), s = std::sin(0.7);
    const auto q = DenseMatrix::from_rows({{c, -s, 0}, {s, c, 0}, {0, 0, 1}});
    for (double x : reference_svd(q).sigma) EXPECT_NEAR(x, 1.0, 1e-10);
}

TEST(ReferenceSvd, SelfConsistency) {
    std::mt19937_64 rng(2);
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{10, 7}, {7, 10}}) {
        const auto m = test::random_matrix(r, c, rng);
        const auto s = reference_svd(m);
        const std::size_t p = std::min(r, c);
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) {
                double uu = 0.0, vv = 0.0;
                for (std::size_t i = 0; i < r; ++i) uu += s.u(i, a) * s.u(i, b);
                for (std::size_t j = 0; j < c; ++j) vv += s.v(j, a) * s.v(j, b);
                EXPECT_NEAR(uu, a == b, 1e-9);
                EXPECT_NEAR(vv, a == b, 1e-9);
            }
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                double x = 0.0;
                for (std::size_t k = 0; k < p; ++k) x += s.sigma[k] * s.u(i, k) * s.v(j, k);
                EXPECT_NEAR(x, m(i, j), 1e-9);
            }
        EXPECT_TRUE(std::is_sorted(s.sigma.rbegin(), s.sigma.rend()));
    }
}

TEST(ExhaustiveTinySlab, DensityExtremes) {
    std::mt19937_64 rng(3);
    const auto w = test::random_matrix(4, 4, rng);
    const std::vector<double> s_x{1.0, 0.5, 2.0, 1.5};
    EXPECT_NEAR(exhaustive_tiny_slab(w, s_x, 1.0).error, 0.0, 1e-15);

    // Nothing kept: the error is the whole binary / low-rank residual.
    const auto none = exhaustive_tiny_slab(w, s_x, 0.0);
    for (bool b : none.mask) EXPECT_FALSE(b);
    const auto ref = reference_svd(abs(w));
    double err = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const double l = ref.sigma[0] * ref.u(i, 0) * ref.v(j, 0);
            const double r = w(i, j) - (w(i, j) >= 0 ? l : -l);
            err += r * r * s_x[j] * s_x[j];
        }
    EXPECT_NEAR(none.error, std::sqrt(err), 1e-12);
    EXPECT_THROW(exhaustive_tiny_slab(DenseMatrix(5, 5), std::vector<double>(5, 1.0), 0.5), std::invalid_argument);
}

TEST(ExhaustiveTinyMask, RespectsGroups) {
    const auto r = DenseMatrix::from_rows({{5, 1, 1, 1}, {4, 3, 2, 1}});
    const auto best = exhaustive_tiny_mask(r, std::vector<double>(4, 1.0), 1, 1, 4);
    EXPECT_TRUE(best.mask[0]);
    EXPECT_TRUE(best.mask[4]);
    EXPECT_NEAR(best.error, std::sqrt(3.0 + 9 + 4 + 1), 1e-15);
}

TEST(SortTopk, StableTies) {
    const auto s = DenseMatrix::from_rows({{1, 1, 1, 1}});
    EXPECT_EQ(sort_topk_mask(s, 1, 4, 2), (std::vector<bool>{true, true, false, false}));
}
