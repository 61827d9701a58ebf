#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"
#include "transmc/selection.hpp"

using namespace transmc;

namespace {

BenchmarkLoss bench(std::vector<double> folds) {
    BenchmarkLoss b;
    b.fold_losses = folds;
    b.L0 = std::accumulate(folds.begin(), folds.end(), 0.0) / static_cast<double>(folds.size());
    b.sigma_hat = spread(folds, b.L0, SpreadMode::sample);
    return b;
}

}  // namespace

TEST(Folds, PartitionWithBalancedSizes) {
    Rng rng = make_rng(1);
    const MaskedDataset d = testsupport::sample(Matrix::Ones(5, 4), 10, 1.0, rng);
    const auto folds = split_folds(d, 4, 99);
    ASSERT_EQ(folds.size(), 4u);
    EXPECT_EQ(folds[0].size(), 3u);
    EXPECT_EQ(folds[1].size(), 3u);
    EXPECT_EQ(folds[2].size(), 2u);
    EXPECT_EQ(folds[3].size(), 2u);
    std::vector<double> seen;
    for (const auto& f : folds)
        for (const auto& o : f.obs) seen.push_back(o.value);
    std::vector<double> orig;
    for (const auto& o : d.obs) orig.push_back(o.value);
    std::sort(seen.begin(), seen.end());
    std::sort(orig.begin(), orig.end());
    EXPECT_EQ(seen, orig);
    EXPECT_THROW(split_folds(d, 11, 1), InvalidInput);
}

TEST(Folds, SameSeedSameSplit) {
    Rng rng = make_rng(2);
    const MaskedDataset d = testsupport::sample(Matrix::Ones(5, 4), 30, 1.0, rng);
    const auto a = split_folds(d, 3, 5);
    const auto b = split_folds(d, 3, 5);
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a[j].obs, b[j].obs);
}

TEST(Spread, SampleAndPopulationDenominators) {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    EXPECT_NEAR(spread(x, 2.5, SpreadMode::sample), std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_NEAR(spread(x, 2.5, SpreadMode::population), std::sqrt(5.0 / 4.0), 1e-15);
}

TEST(SelectSources, WorkedExample) {
    // Fold losses 1.0, 1.2, 0.8, 1.0: L0 = 1.0, sigma_hat = sqrt(0.08 / 3).
    const BenchmarkLoss b = bench({1.0, 1.2, 0.8, 1.0});
    EXPECT_NEAR(b.L0, 1.0, 1e-15);
    EXPECT_NEAR(b.sigma_hat, std::sqrt(0.08 / 3.0), 1e-15);
    const auto r = select_sources(b, {1.1, 1.5, 1.4}, 0.01, 2.0);
    EXPECT_NEAR(r.threshold, 2.0 * std::sqrt(0.08 / 3.0), 1e-15);
    EXPECT_EQ(r.selected, (std::vector<int>{1}));
}

TEST(SelectSources, EpsilonFloorGovernsWhenFoldsAgree) {
    const BenchmarkLoss b = bench({1.0, 1.0, 1.0, 1.0});
    EXPECT_EQ(b.sigma_hat, 0.0);
    const auto r = select_sources(b, {1.05, 1.15, 0.9}, 0.1, 1.0);
    EXPECT_NEAR(r.threshold, 0.1, 1e-15);
    EXPECT_EQ(r.selected, (std::vector<int>{1, 3}));
}

TEST(SelectSources, TieAtTheThresholdIsSelected) {
    const BenchmarkLoss b = bench({1.0, 1.0});
    const auto r = select_sources(b, {1.5}, 0.25, 2.0);
    EXPECT_EQ(r.selected, (std::vector<int>{1}));
}

TEST(SelectSources, RuleIsMonotone) {
    Rng rng = make_rng(3);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> folds(4), losses(6);
        for (auto& x : folds) x = testsupport::uniform_real(rng, 0.5, 1.5);
        for (auto& x : losses) x = testsupport::uniform_real(rng, 0.5, 3.0);
        const BenchmarkLoss b = bench(folds);
        const double eps = testsupport::uniform_real(rng, 0.01, 0.5);
        const double c = testsupport::uniform_real(rng, 0.5, 3.0);
        const auto base = select_sources(b, losses, eps, c).selected;
        auto contains = [](const std::vector<int>& big, const std::vector<int>& small) {
            return std::includes(big.begin(), big.end(), small.begin(), small.end());
        };
        EXPECT_TRUE(contains(select_sources(b, losses, eps * 2.0, c).selected, base));
        EXPECT_TRUE(contains(select_sources(b, losses, eps, c * 1.5).selected, base));
        auto lower = losses;
        const auto k = static_cast<std::size_t>(testsupport::uniform_int(rng, 0, 5));
        lower[k] -= 0.3;
        EXPECT_TRUE(contains(select_sources(b, lower, eps, c).selected, base));
    }
}

TEST(SelectSources, RejectsNonPositiveConstants) {
    const BenchmarkLoss b = bench({1.0, 1.1});
    EXPECT_THROW(select_sources(b, {1.0}, 0.0, 1.0), InvalidInput);
    EXPECT_THROW(select_sources(b, {1.0}, 0.1, -1.0), InvalidInput);
    SelectionConfig cfg;
    cfg.folds = 1;
    EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(DetectSources, SeparatesCloseAndFarSources) {
    Rng rng = make_rng(4);
    Matrix truth = testsupport::low_rank(24, 20, 2, rng);
    truth *= 5.0 / truth.cwiseAbs().maxCoeff();
    const MaskedDataset target = testsupport::sample(truth, 240, 0.3, rng, 0);
    std::vector<MaskedDataset> sources;
    for (int k = 1; k <= 3; ++k) sources.push_back(testsupport::sample(truth, 300, 0.3, rng, k));
    for (int k = 4; k <= 5; ++k) {
        const Matrix far = truth + 2.0 * testsupport::low_rank(24, 20, 2, rng);
        sources.push_back(testsupport::sample(far, 300, 0.3, rng, k));
    }
    std::vector<const MaskedDataset*> ptrs;
    for (const auto& s : sources) ptrs.push_back(&s);
    SelectionConfig cfg;
    cfg.c0 = cfg.ck = 0.2;
    cfg.v = 0.3;
    cfg.epsilon0 = 0.05;
    const auto report = detect_sources(target, ptrs, cfg, 5.0, default_solver_config());
    EXPECT_EQ(report.selected, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(report.fold_losses.size(), 4u);
    EXPECT_EQ(report.source_losses.size(), 5u);
    for (int k : report.selected) EXPECT_LE(report.source_losses[static_cast<std::size_t>(k - 1)] - report.L0, report.threshold);

    PenaltyPolicy p;
    p.c1 = p.c2 = 0.2;
    p.v = 0.3;
    const auto full = s_trans_mc(target, sources, cfg, p, 5.0, default_solver_config());
    EXPECT_EQ(full.report.selected, report.selected);
}

TEST(DetectSources, ExplicitPenaltiesNeedOnePerSource) {
    Rng rng = make_rng(5);
    const MaskedDataset target = testsupport::sample(Matrix::Ones(6, 5), 40, 0.1, rng, 0);
    const MaskedDataset s1 = testsupport::sample(Matrix::Ones(6, 5), 40, 0.1, rng, 1);
    const MaskedDataset s2 = testsupport::sample(Matrix::Ones(6, 5), 40, 0.1, rng, 2);
    SelectionConfig cfg;
    cfg.penalty_mode = PenaltyMode::explicit_values;
    cfg.lambda0 = 0.01;
    cfg.lambda_k = {0.01, 0.02, 0.03};
    cfg.epsilon0 = 0.1;
    EXPECT_THROW(detect_sources(target, {&s1, &s2}, cfg, 2.0, default_solver_config()), InvalidInput);
    cfg.lambda_k = {0.01};
    const auto r = detect_sources(target, {&s1, &s2}, cfg, 2.0, default_solver_config());
    EXPECT_EQ(r.lambda_k, (std::vector<double>{0.01, 0.01}));
}

TEST(STransMc, EmptySelectionFallsBackToTheTarget) {
    Rng rng = make_rng(6);
    Matrix truth = testsupport::low_rank(10, 8, 1, rng);
    truth *= 2.0 / truth.cwiseAbs().maxCoeff();
    const MaskedDataset target = testsupport::sample(truth, 60, 0.1, rng, 0);
    const MaskedDataset far = testsupport::sample(-truth, 60, 0.1, rng, 1);
    SelectionConfig cfg;
    cfg.c0 = cfg.ck = 0.2;
    cfg.v = 0.1;
    cfg.epsilon0 = 0.01;
    cfg.c_tilde = 1.0;
    const auto p = PenaltyPolicy::explicit_penalties(0.02, 0.02);
    const auto out = s_trans_mc(target, std::vector<MaskedDataset>{far}, cfg, p, 2.0, default_solver_config());
    EXPECT_TRUE(out.report.selected.empty());
    const auto alone = trans_mc(target, std::vector<MaskedDataset>{}, p, 2.0, default_solver_config());
    EXPECT_EQ(out.estimate.combined.matrix, alone.combined.matrix);
}
