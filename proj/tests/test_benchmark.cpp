#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "transmc/benchmark.hpp"

using namespace transmc;

namespace {

ScenarioSpec tiny(std::size_t sources) {
    ScenarioSpec s;
    s.rows = 10;
    s.cols = 8;
    s.rank = 2;
    s.a_cap = 5.0;
    s.contrast_nuclear.assign(sources, 0.5);
    s.n0_fraction = 0.6;
    s.nk_fraction = 0.6;
    s.noise_sd = 0.3;
    s.seed = 3;
    return s;
}

BenchmarkSettings quick(unsigned jobs) {
    BenchmarkSettings b;
    b.transfer.c1 = b.transfer.c2 = 0.2;
    b.selection.c0 = b.selection.ck = 0.2;
    b.reps = 3;
    b.jobs = jobs;
    b.solver.max_iters = 200;
    return b;
}

std::string csv(const BenchmarkReport& r) {
    std::ostringstream out;
    write_benchmark_csv(out, r);
    write_curve_csv(out, r.curve);
    return out.str();
}

}  // namespace

TEST(Benchmark, CurveHasOneRowPerSourceCount) {
    const BenchmarkReport r = run_benchmark(tiny(3), quick(1), {SamplingKind::uniform});
    EXPECT_EQ(r.curve.by_k.size(), 4u);
    ASSERT_EQ(r.rows.size(), 3u);
    EXPECT_EQ(r.rows[0].method, "single");
    EXPECT_EQ(r.rows[2].method, "s-transmc");
    EXPECT_EQ(r.failed_reps, 0u);
    std::ostringstream out;
    write_curve_csv(out, r.curve);
    EXPECT_EQ(out.str().substr(0, 21), "k_sources,mean_err,sd");
}

TEST(Benchmark, NoSourcesGivesOnlyTheSingleRow) {
    BenchmarkSettings b = quick(1);
    b.reps = 1;
    const ScenarioSpec spec = tiny(0);
    const BenchmarkReport r = run_benchmark(spec, b, {SamplingKind::uniform});
    ASSERT_EQ(r.rows.size(), 1u);
    // Same number as a direct fit and evaluation.
    const Scenario sc = make_scenario(spec);
    const ReplicateData d = draw_replicate(sc, 0);
    const double lam = theorem_penalty(0.2, 5.0, 0.3, static_cast<double>(d.target.size()), 10, 8);
    EXPECT_EQ(r.rows[0].summary.mean, rel_frob_error(fit_single(d.target, lam, 5.0, b.solver).matrix, sc.target));
}

TEST(Benchmark, OutputDoesNotDependOnWorkerCount) {
    const auto schemes = std::vector<SamplingKind>{SamplingKind::uniform, SamplingKind::row_col_product};
    EXPECT_EQ(csv(run_benchmark(tiny(2), quick(1), schemes)), csv(run_benchmark(tiny(2), quick(3), schemes)));
}

TEST(Benchmark, LogLogSlopeOfAPowerLaw) {
    EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 1.5, 0.75, 0.375}), -1.0, 1e-12);
    EXPECT_NEAR(loglog_slope({1, 10}, {1, 100}), 2.0, 1e-12);
    EXPECT_THROW(loglog_slope({1}, {1}), InvalidInput);
}

TEST(Benchmark, InformativeSourcesAreTheSmallestBudget) {
    ScenarioSpec s = tiny(0);
    s.contrast_nuclear = {1.0, 3.0, 1.01, 3.0};
    EXPECT_EQ(informative_sources(s), (std::vector<int>{1, 3}));
}

TEST(FramePipeline, IdenticalNeighboursHelp) {
    // Every frame is the same noisy low-rank map: transfer should not lose.
    Rng rng = make_rng(4);
    std::normal_distribution<double> g;
    Matrix u(12, 2), v(10, 2);
    for (auto& x : u.reshaped()) x = g(rng);
    for (auto& x : v.reshaped()) x = g(rng);
    const Matrix truth = u * v.transpose();
    std::vector<MaskedDataset> frames;
    for (int t = 0; t < 5; ++t) {
        MaskedDataset d{12, 10, {}, t};
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 10; ++j)
                if ((i * 7 + j * 3 + t) % 4 != 0) d.obs.push_back({i, j, truth(i, j) + 0.1 * g(rng)});
        frames.push_back(d);
    }
    BenchmarkSettings b = quick(1);
    b.transfer.v = 0.1;
    const auto scores = frame_pipeline(frames, {1, 2, 3}, 2, 0.2, 9, b, false);
    ASSERT_EQ(scores.size(), 3u);
    double single = 0.0, transfer = 0.0;
    for (const auto& f : scores) {
        single += f.single.re;
        transfer += f.transmc.re;
        EXPECT_FALSE(f.has_selection);
    }
    EXPECT_LE(transfer, single);
    std::ostringstream out;
    write_frame_scores_csv(out, scores);
    const std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}

TEST(FramePipeline, FullyObservedNeighboursGiveExactTransfer) {
    // Noiseless constant frames. The neighbours see every cell, so the
    // unpenalized pooled fit already knows the held-out entries of the target.
    std::vector<MaskedDataset> frames;
    for (int t = 0; t < 3; ++t) {
        MaskedDataset d{4, 4, {}, t};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) d.obs.push_back({i, j, 1.0});
        frames.push_back(d);
    }
    BenchmarkSettings b = quick(1);
    b.solver.epsilon = 1e-12;
    b.solver.max_iters = 5000;
    b.transfer = PenaltyPolicy::explicit_penalties(0.0, 0.0);
    b.transfer.v = 1.0;
    b.box = 2.0;
    const auto scores = frame_pipeline(frames, {1}, 1, 0.25, 2, b);
    ASSERT_EQ(scores.size(), 1u);
    EXPECT_NEAR(scores[0].transmc.e, 0.0, 1e-6);
    EXPECT_NEAR(scores[0].transmc.re, 0.0, 1e-6);
    EXPECT_NEAR(scores[0].s_transmc.re, 0.0, 1e-6);
    EXPECT_EQ(scores[0].selected, (std::vector<int>{1, 2}));
    EXPECT_GT(scores[0].single.re, 0.5);  // unpenalized target fit leaves held-out cells at zero
}

TEST(BenchmarkSettings, ConfigKeysOverridePreset) {
    std::istringstream in("c1 = 0.3\nnoise_scale = pilot\nsource_loss = fold_average\nreps = 4\n");
    BenchmarkSettings s = preset_settings("paper-5.1-small");
    s.apply(KeyValueFile::parse(in));
    EXPECT_DOUBLE_EQ(s.transfer.c1, 0.3);
    EXPECT_TRUE(std::isnan(s.transfer.v));
    EXPECT_EQ(s.selection.source_loss, SourceLossMode::fold_average);
    EXPECT_EQ(s.reps, 4u);
    std::istringstream bad("source_loss = sometimes\n");
    EXPECT_THROW(s.apply(KeyValueFile::parse(bad)), ParseError);
}
