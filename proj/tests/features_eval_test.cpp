#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "qscreen/eval.hpp"
#include "qscreen/features.hpp"
#include "qscreen/matrix.hpp"

using qscreen::angle_apply;
using qscreen::angle_fit;
using qscreen::anova_select;
using qscreen::Matrix;
using qscreen::mean_std;
using qscreen::pca_fit;
using qscreen::pca_transform;
using qscreen::pipeline_angles;
using qscreen::pipeline_features;
using qscreen::pipeline_fit;
using qscreen::pipeline_from_json;
using qscreen::pipeline_to_json;
using qscreen::roc_auc;
using qscreen::Selector;
using qscreen::standardize_apply;
using qscreen::standardize_fit;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = u(gen);
    return m;
}

std::vector<int> alternating_labels(std::size_t n) {
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) y.push_back(i % 2 == 0 ? 1 : -1);
    return y;
}

} // namespace

TEST(Standardize, CentersAndScalesWithPopulationStd) {
    const auto x = Matrix::from_rows({{1.0}, {2.0}, {3.0}});
    const auto s = standardize_fit(x);
    EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
    EXPECT_DOUBLE_EQ(s.stddev[0], std::sqrt(2.0 / 3.0));
    const auto z = standardize_apply(s, x);
    EXPECT_NEAR(z(0, 0), -std::sqrt(1.5), 1e-12);
    EXPECT_NEAR(z(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(z(2, 0), std::sqrt(1.5), 1e-12);
}

TEST(Standardize, ConstantColumnMapsToZero) {
    const auto x = Matrix::from_rows({{5.0, 1.0}, {5.0, 2.0}});
    const auto z = standardize_apply(standardize_fit(x), x);
    EXPECT_DOUBLE_EQ(z(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(z(1, 0), 0.0);
    EXPECT_NE(z(0, 1), z(1, 1));
}

TEST(Standardize, TrainStatsApplyToNewRows) {
    const auto train = random_matrix(50, 3, 1);
    const auto s = standardize_fit(train);
    const auto z = standardize_apply(s, train);
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r) mean += z(r, c);
        EXPECT_NEAR(mean / static_cast<double>(z.rows()), 0.0, 1e-12);
    }
    EXPECT_THROW(standardize_apply(s, Matrix(2, 5)), std::invalid_argument);
}

TEST(Anova, TwoGroupReferenceValue) {
    // class 0 holds {0, 1}, class 1 holds {2, 3}: F = 8
    const auto x = Matrix::from_rows({{0.0}, {2.0}, {1.0}, {3.0}});
    const std::vector<int> y = {-1, 1, -1, 1};
    const auto sel = anova_select(x, y, 1);
    EXPECT_NEAR(sel.f_scores[0], 8.0, 1e-10);
    EXPECT_NEAR(sel.f_scores[0], oracles::anova_f_via_t({0.0, 1.0}, {2.0, 3.0}), 1e-10);
}

TEST(Anova, AgreesWithPooledTStatisticOracle) {
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t rows = 12;
        Matrix x(rows, 1);
        std::vector<int> y = alternating_labels(rows);
        std::vector<double> c0, c1;
        for (std::size_t r = 0; r < rows; ++r) {
            x(r, 0) = u(gen) + (y[r] > 0 ? 0.5 : 0.0);
            (y[r] > 0 ? c1 : c0).push_back(x(r, 0));
        }
        const auto sel = anova_select(x, y, 1);
        EXPECT_NEAR(sel.f_scores[0], oracles::anova_f_via_t(c0, c1), 1e-10) << trial;
    }
}

TEST(Anova, DegenerateColumns) {
    // col 0: identical distributions -> F = 0
    // col 1: zero within-class variance, distinct means -> F = +inf, ranked first
    const auto x = Matrix::from_rows({{1.0, 0.0}, {1.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}});
    const std::vector<int> y = {-1, 1, -1, 1};
    const auto sel = anova_select(x, y, 2);
    EXPECT_DOUBLE_EQ(sel.f_scores[0], 0.0);
    EXPECT_TRUE(std::isinf(sel.f_scores[1]));
    const auto top1 = anova_select(x, y, 1);
    EXPECT_EQ(top1.selected, (std::vector<std::size_t>{1}));
}

TEST(Anova, TieBreaksTowardLowerIndex) {
    const auto x = Matrix::from_rows({{0.0, 5.0, 0.0}, {2.0, 5.0, 2.0},
                                      {1.0, 5.0, 1.0}, {3.0, 5.0, 3.0}});
    const std::vector<int> y = {-1, 1, -1, 1};
    const auto sel = anova_select(x, y, 1);
    EXPECT_EQ(sel.selected, (std::vector<std::size_t>{0})); // cols 0 and 2 tie
}

TEST(Anova, SelectionInvariantUnderAffineRescaling) {
    const auto x = random_matrix(30, 6, 5);
    std::vector<int> y = alternating_labels(30);
    const auto base = anova_select(x, y, 3);

    Matrix scaled = x;
    const double scale[6] = {2.0, -3.0, 0.5, 10.0, -0.25, 7.0};
    const double shift[6] = {1.0, -2.0, 3.0, -4.0, 5.0, -6.0};
    for (std::size_t r = 0; r < scaled.rows(); ++r)
        for (std::size_t c = 0; c < scaled.cols(); ++c)
            scaled(r, c) = scaled(r, c) * scale[c] + shift[c];
    const auto after = anova_select(scaled, y, 3);
    EXPECT_EQ(base.selected, after.selected);
}

TEST(Anova, RequiresBothClassesTwice) {
    const auto x = Matrix::from_rows({{1.0}, {2.0}, {3.0}});
    EXPECT_THROW(anova_select(x, {1, 1, -1}, 1), std::invalid_argument);
}

TEST(Pca, CollinearDataConcentratesVariance) {
    const auto x = Matrix::from_rows({{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}});
    const auto model = pca_fit(x, 2);
    // first component is the diagonal direction, sign fixed to positive
    EXPECT_NEAR(model.components(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(model.components(0, 1), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(model.explained_variance[0], 2.0, 1e-12); // var(1,2,3)*2 with n-1
    EXPECT_NEAR(model.explained_variance[1], 0.0, 1e-10);
}

TEST(Pca, VariancesMatchCovarianceEigenvaluesOracle) {
    const auto x = random_matrix(20, 6, 9);
    const auto model = pca_fit(x, 4);
    const auto ev = oracles::covariance_eigenvalues(x);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(model.explained_variance[k], ev[k], 1e-8) << k;
    for (std::size_t k = 1; k < 4; ++k)
        EXPECT_GE(model.explained_variance[k - 1], model.explained_variance[k] - 1e-12);
}

TEST(Pca, ComponentsAreOrthonormal) {
    const auto x = random_matrix(25, 5, 13);
    const auto model = pca_fit(x, 4);
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) {
            const double d = qscreen::dot(model.components.row(a), model.components.row(b));
            EXPECT_NEAR(d, a == b ? 1.0 : 0.0, 1e-10) << a << "," << b;
        }
}

TEST(Pca, FullRankTransformReconstructs) {
    const auto x = random_matrix(20, 4, 17);
    const auto model = pca_fit(x, 4);
    const auto t = pca_transform(model, x);
    // x_centered = t * components reconstructs the input
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) {
            double rec = model.column_mean[c];
            for (std::size_t k = 0; k < 4; ++k) rec += t(r, k) * model.components(k, c);
            EXPECT_NEAR(rec, x(r, c), 1e-8);
        }
}

TEST(Pca, TransformedTrainScoresAreDecorrelated) {
    const auto x = random_matrix(40, 6, 21);
    const auto model = pca_fit(x, 3);
    const auto t = pca_transform(model, x);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b) {
            double cov = 0.0;
            for (std::size_t r = 0; r < t.rows(); ++r) cov += t(r, a) * t(r, b);
            EXPECT_NEAR(cov / static_cast<double>(t.rows() - 1), 0.0, 1e-8);
        }
}

TEST(Pca, ComponentCountBoundedByRowsMinusOne) {
    const auto x = random_matrix(4, 8, 3);
    EXPECT_NO_THROW(pca_fit(x, 3));
    EXPECT_THROW(pca_fit(x, 4), std::invalid_argument);
    EXPECT_THROW(pca_fit(random_matrix(10, 3, 3), 4), std::invalid_argument);
}

TEST(AngleScaling, MapsTrainRangeOntoZeroPi) {
    const auto train = Matrix::from_rows({{0.0}, {5.0}, {10.0}});
    const auto a = angle_fit(train);
    const auto mapped = angle_apply(a, train);
    EXPECT_DOUBLE_EQ(mapped(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(mapped(1, 0), std::numbers::pi / 2.0);
    EXPECT_DOUBLE_EQ(mapped(2, 0), std::numbers::pi);
    // out-of-range test values clip to the ends
    const auto clipped = angle_apply(a, Matrix::from_rows({{-3.0}, {12.0}}));
    EXPECT_DOUBLE_EQ(clipped(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(clipped(1, 0), std::numbers::pi);
}

TEST(AngleScaling, ConstantColumnMapsToMidpoint) {
    const auto train = Matrix::from_rows({{7.0}, {7.0}});
    const auto mapped = angle_apply(angle_fit(train), train);
    EXPECT_DOUBLE_EQ(mapped(0, 0), std::numbers::pi / 2.0);
}

TEST(Pipeline, QuantumBranchStaysInsideAngleRange) {
    const auto train = random_matrix(30, 6, 31);
    const auto test = random_matrix(10, 6, 32);
    const std::vector<int> y = alternating_labels(30);
    for (const Selector sel : {Selector::Pca, Selector::Anova}) {
        const auto p = pipeline_fit(train, y, sel, 3);
        const auto angles = pipeline_angles(p, test);
        EXPECT_EQ(angles.cols(), 3u);
        for (std::size_t r = 0; r < angles.rows(); ++r)
            for (std::size_t c = 0; c < angles.cols(); ++c) {
                EXPECT_GE(angles(r, c), 0.0);
                EXPECT_LE(angles(r, c), std::numbers::pi);
            }
    }
}

TEST(Pipeline, JsonRoundTripReproducesTransforms) {
    const auto train = random_matrix(25, 5, 41);
    const auto test = random_matrix(8, 5, 42);
    const std::vector<int> y = alternating_labels(25);
    for (const Selector sel : {Selector::Pca, Selector::Anova}) {
        const auto p = pipeline_fit(train, y, sel, 2);
        const auto q = pipeline_from_json(pipeline_to_json(p));
        EXPECT_EQ(pipeline_features(p, test), pipeline_features(q, test));
        EXPECT_EQ(pipeline_angles(p, test), pipeline_angles(q, test));
        EXPECT_EQ(p.train_fingerprint, q.train_fingerprint);
    }
}

TEST(RocAuc, HandValues) {
    EXPECT_DOUBLE_EQ(roc_auc({1, 1, -1, -1}, {0.9, 0.8, 0.2, 0.1}), 1.0);
    EXPECT_DOUBLE_EQ(roc_auc({1, 1, -1, -1}, {0.1, 0.2, 0.8, 0.9}), 0.0);
    // one inversion among 2x2 pairs: AUC = 3/4
    EXPECT_DOUBLE_EQ(roc_auc({1, -1, 1, -1}, {0.9, 0.8, 0.7, 0.1}), 0.75);
    // all scores equal: every pair ties, AUC = 1/2
    EXPECT_DOUBLE_EQ(roc_auc({1, -1, 1, -1}, {0.5, 0.5, 0.5, 0.5}), 0.5);
}

TEST(RocAuc, MatchesPairwiseOracleWithTies) {
    std::mt19937_64 gen(55);
    std::uniform_int_distribution<int> score(0, 4); // coarse scores force ties
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(gen() % 40);
        std::vector<int> y = alternating_labels(n);
        std::vector<double> s;
        for (std::size_t i = 0; i < n; ++i) s.push_back(0.25 * score(gen));
        EXPECT_NEAR(roc_auc(y, s), oracles::pairwise_auc(y, s), 1e-12) << trial;
    }
}

TEST(RocAuc, InvariantUnderMonotoneTransform) {
    const std::vector<int> y = {1, -1, 1, -1, 1, -1, -1};
    std::vector<double> s = {2.0, 1.5, 0.3, -0.2, 0.9, 0.4, 2.5};
    const double base = roc_auc(y, s);
    std::vector<double> warped;
    for (const double v : s) warped.push_back(std::exp(3.0 * v) + 1.0);
    EXPECT_DOUBLE_EQ(roc_auc(y, warped), base);
}

TEST(RocAuc, ComplementUnderScoreNegation) {
    const std::vector<int> y = {1, -1, 1, -1, -1};
    const std::vector<double> s = {0.7, 0.1, 0.6, 0.8, 0.4}; // tie-free
    std::vector<double> neg;
    for (const double v : s) neg.push_back(-v);
    EXPECT_NEAR(roc_auc(y, s) + roc_auc(y, neg), 1.0, 1e-15);
}

TEST(RocAuc, RejectsDegenerateInputs) {
    EXPECT_THROW(roc_auc({1, 1}, {0.1, 0.2}), std::invalid_argument);
    EXPECT_THROW(roc_auc({1, -1}, {0.1}), std::invalid_argument);
}

TEST(MeanStd, SampleConvention) {
    const auto ms = mean_std({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(ms.mean, 2.5);
    EXPECT_NEAR(ms.stddev, std::sqrt(5.0 / 3.0), 1e-15);
    const auto single = mean_std({7.0});
    EXPECT_DOUBLE_EQ(single.mean, 7.0);
    EXPECT_DOUBLE_EQ(single.stddev, 0.0);
}
