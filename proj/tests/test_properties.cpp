#include <gtest/gtest.h>

#include "properties.hpp"

using namespace testsupport;

namespace {
constexpr int kCases = 1000;
constexpr std::uint64_t kSeed = 20240611;
}  // namespace

TEST(Property, SoftThresholdNonexpansive) {
    const auto r = soft_threshold_nonexpansive(kCases, kSeed);
    EXPECT_TRUE(r.ok()) << r.failures << " failures, " << r.first_failure;
}

TEST(Property, ProjectBoxIdempotent) {
    const auto r = project_box_idempotent(kCases, kSeed);
    EXPECT_TRUE(r.ok()) << r.failures << " failures, " << r.first_failure;
}

TEST(Property, RowColProjectionRankBound) {
    const auto r = rowcol_rank_bound(kCases, kSeed);
    EXPECT_TRUE(r.ok()) << r.failures << " failures, " << r.first_failure;
}

TEST(Property, SvdRoundTrip) {
    const auto r = svd_round_trip(kCases, kSeed);
    EXPECT_TRUE(r.ok()) << r.failures << " failures, " << r.first_failure;
}

TEST(Property, HoldoutPartitionExact) {
    const auto r = holdout_partition(kCases, kSeed);
    EXPECT_TRUE(r.ok()) << r.failures << " failures, " << r.first_failure;
}

TEST(Property, PipelineSeedDeterminism) {
    const auto r = pipeline_determinism(kCases, kSeed);
    EXPECT_TRUE(r.ok()) << r.failures << " failures, " << r.first_failure;
}
