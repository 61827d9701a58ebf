#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "transmc/error.hpp"
#include "transmc/linalg.hpp"

using namespace transmc;
using testsupport::gaussian;
using testsupport::low_rank;

namespace {

Matrix m22(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

}  // namespace

TEST(Svd, TwoByTwoMatchesGramRoots) {
    // Singular values of [[1,2],[3,4]] are the square roots of t^2 - 30 t + 4.
    const Vector s = svd(m22(1, 2, 3, 4)).sigma;
    ASSERT_EQ(s.size(), 2);
    EXPECT_NEAR(s(0), std::sqrt(15.0 + std::sqrt(221.0)), 1e-12);
    EXPECT_NEAR(s(1), std::sqrt(15.0 - std::sqrt(221.0)), 1e-12);
    EXPECT_NEAR(s(0), 5.4649857, 1e-7);
    EXPECT_NEAR(s(1), 0.3659662, 1e-7);
}

TEST(Svd, RoundTripAndOrthonormalFactors) {
    Rng rng = make_rng(11);
    for (auto [r, c] : {std::pair{7, 4}, std::pair{3, 9}, std::pair{5, 5}}) {
        const Matrix a = gaussian(r, c, rng);
        const SvdFactors f = svd(a);
        EXPECT_LE((f.reconstruct() - a).norm(), 1e-10 * a.norm());
        const Eigen::Index k = std::min(r, c);
        EXPECT_LE((f.u.transpose() * f.u - Matrix::Identity(k, k)).norm(), 1e-10);
        EXPECT_LE((f.v.transpose() * f.v - Matrix::Identity(k, k)).norm(), 1e-10);
        for (Eigen::Index i = 1; i < f.sigma.size(); ++i) EXPECT_GE(f.sigma(i - 1), f.sigma(i));
    }
}

TEST(Svd, SignConventionIsDeterministic) {
    Rng rng = make_rng(12);
    const Matrix a = gaussian(6, 4, rng);
    const SvdFactors f = svd(a);
    const SvdFactors g = svd(-(-a));
    EXPECT_EQ(f.u, g.u);
    for (Eigen::Index j = 0; j < f.u.cols(); ++j) {
        Eigen::Index idx = 0;
        f.u.col(j).cwiseAbs().maxCoeff(&idx);
        EXPECT_GE(f.u(idx, j), 0.0);
    }
}

TEST(Svd, RejectsNonFinite) {
    Matrix a = Matrix::Ones(2, 2);
    a(0, 1) = std::nan("");
    EXPECT_THROW(svd(a), InvalidInput);
}

TEST(Norms, DiagonalExample) {
    const NormSet n = norms(m22(3, 0, 0, -4));
    EXPECT_NEAR(n.frobenius, 5.0, 1e-12);
    EXPECT_NEAR(n.nuclear, 7.0, 1e-12);
    EXPECT_NEAR(n.spectral, 4.0, 1e-12);
    EXPECT_NEAR(n.max_abs_entry, 4.0, 1e-12);
}

TEST(Norms, AgreeWithGramOracle) {
    Rng rng = make_rng(13);
    for (int t = 0; t < 20; ++t) {
        const Matrix a = gaussian(testsupport::uniform_int(rng, 1, 8), testsupport::uniform_int(rng, 1, 8), rng);
        const Vector ref = testsupport::gram_singular_values(a);
        EXPECT_NEAR(nuclear_norm(a), ref.sum(), 1e-9 * (1.0 + ref.sum()));
        EXPECT_NEAR(norms(a).spectral, ref(0), 1e-9 * (1.0 + ref(0)));
    }
}

TEST(Rank, CountsRelativeToTopSingularValue) {
    Rng rng = make_rng(14);
    EXPECT_EQ(numerical_rank(low_rank(9, 7, 3, rng)), 3);
    EXPECT_EQ(numerical_rank(Matrix(Matrix::Zero(3, 3))), 0);
}

TEST(WeightedFrobenius, UniformWeightsScaleFrobenius) {
    Rng rng = make_rng(15);
    const Matrix a = gaussian(4, 6, rng);
    const Matrix p = Matrix::Constant(4, 6, 1.0 / 24.0);
    EXPECT_NEAR(weighted_frobenius(a, p), a.norm() / std::sqrt(24.0), 1e-12);
}

TEST(WeightedFrobenius, PointMassPicksOneEntry) {
    Matrix p = Matrix::Zero(2, 2);
    p(1, 0) = 1.0;
    EXPECT_NEAR(weighted_frobenius(m22(1, 2, -3, 4), p), 3.0, 1e-12);
}

TEST(WeightedFrobenius, RejectsBadWeights) {
    const Matrix a = Matrix::Ones(2, 2);
    EXPECT_THROW(weighted_frobenius(a, Matrix::Constant(2, 3, 1.0 / 6.0)), InvalidInput);
    EXPECT_THROW(weighted_frobenius(a, Matrix::Constant(2, 2, 0.3)), InvalidInput);
    Matrix neg = Matrix::Constant(2, 2, 0.25);
    neg(0, 0) = -0.25;
    neg(0, 1) = 0.75;
    EXPECT_THROW(weighted_frobenius(a, neg), InvalidInput);
}

TEST(SoftThreshold, DiagonalShrinksEachValue) {
    const Matrix out = soft_threshold(m22(5, 0, 0, 2), 1.0);
    EXPECT_NEAR(out(0, 0), 4.0, 1e-12);
    EXPECT_NEAR(out(1, 1), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(out(0, 1)) + std::abs(out(1, 0)), 0.0, 1e-12);
}

TEST(SoftThreshold, LargeThresholdGivesZero) {
    Rng rng = make_rng(16);
    const Matrix a = gaussian(5, 3, rng);
    EXPECT_EQ(soft_threshold(a, svd(a).sigma(0) + 1e-9).norm(), 0.0);
    EXPECT_EQ(soft_threshold(a, 0.0), a);
    EXPECT_THROW(soft_threshold(a, -1.0), InvalidInput);
}

TEST(SoftThreshold, MatchesGramOracle) {
    Rng rng = make_rng(17);
    for (int t = 0; t < 30; ++t) {
        const Matrix a = gaussian(testsupport::uniform_int(rng, 2, 9), testsupport::uniform_int(rng, 2, 9), rng);
        const double lam = testsupport::uniform_real(rng, 0.0, 2.0);
        EXPECT_LE((soft_threshold(a, lam) - testsupport::gram_soft_threshold(a, lam)).norm(), 1e-8 * (1.0 + a.norm()));
    }
}

TEST(ProjectBox, ClampsEntries) {
    const Matrix out = project_box(m22(-5, 0.5, 2, 7), 1.0);
    EXPECT_EQ(out, m22(-1, 0.5, 1, 1));
}

TEST(ProjectBox, ShiftMovesTheBox) {
    // |X + S| <= 1 with S = 2 means X in [-3, -1].
    const Matrix out = project_box(m22(0, -2, -5, 1), 1.0, Matrix::Constant(2, 2, 2.0));
    EXPECT_EQ(out, m22(-1, -2, -3, -1));
    EXPECT_THROW(project_box(m22(0, 0, 0, 0), -1.0), InvalidInput);
}

TEST(RowColProjection, SplitsAndBoundsRank) {
    Rng rng = make_rng(18);
    const Matrix a = low_rank(8, 6, 2, rng);
    const Matrix b = gaussian(8, 6, rng);
    const RowColProjection p = project_rowcol(a, b);
    EXPECT_LE((p.onto + p.orthogonal - b).norm(), 1e-10 * b.norm());
    EXPECT_LE(numerical_rank(p.onto), 2 * 2);
    // P_A(A) = A
    EXPECT_LE((project_rowcol(a, a).orthogonal).norm(), 1e-9 * a.norm());
}
