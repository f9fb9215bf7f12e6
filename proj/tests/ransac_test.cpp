#include "depthstitch/robust.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "depthstitch/rng.hpp"
#include "depthstitch/synth.hpp"
#include "test_support.hpp"

namespace {

using namespace depthstitch;
using test_support::canonical_gap;
using test_support::exact_records;
using test_support::expect_error;
using test_support::random_camera_model;

TEST(RansacFit, OutlierFreeRecordsAreAllInliers) {
  Rng rng(100);
  const EpipolarModel truth = random_camera_model(rng);
  MatchSet set = exact_records(truth, 100, rng);
  RansacConfig config;
  config.seed = 5;
  const FitResult fit = ransac_fit(set, config);
  EXPECT_EQ(fit.inliers.size(), 100u);
  EXPECT_LT(fit.mean_mapping_error, 1e-8);
  EXPECT_LT(canonical_gap(truth, fit.model), 1e-7);
}

TEST(RansacFit, RecoversTheLabeledInliersUnderOutliers) {
  const SyntheticFixture fixture = make_two_plane_fixture(3);
  int good_runs = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    MatchSamplingParams sampling;
    sampling.count = 100;
    sampling.outlier_fraction = 0.4;
    sampling.noise_sigma = 0.0;
    sampling.seed = 1000 + seed;
    const MatchSet set = sample_matches(fixture, sampling);

    RansacConfig config;
    config.distance_threshold = 3.0;
    config.seed = seed;
    const FitResult fit = ransac_fit(set, config);

    const EpipolarModel truth = ground_truth_model(fixture);
    std::set<int> claimed(fit.inliers.begin(), fit.inliers.end());
    bool all_true_claimed = true;
    for (size_t i = 0; i < set.records.size(); ++i)
      if (set.true_inlier[i] && !claimed.count(static_cast<int>(i)))
        all_true_claimed = false;
    // Extras are acceptable only when the scrambled point happens to land
    // inside the inlier band of the true model; no estimator can reject
    // those.
    bool extras_consistent = true;
    for (int idx : fit.inliers)
      if (!set.true_inlier[idx] &&
          mapping_error(truth, set.records[idx]) >= config.distance_threshold)
        extras_consistent = false;
    if (all_true_claimed && extras_consistent) ++good_runs;
  }
  EXPECT_GE(good_runs, 19);
}

TEST(RansacFit, DeterministicForAFixedSeed) {
  const SyntheticFixture fixture = make_two_plane_fixture(4);
  MatchSamplingParams sampling;
  sampling.count = 120;
  sampling.outlier_fraction = 0.3;
  sampling.noise_sigma = 0.4;
  sampling.seed = 9;
  const MatchSet set = sample_matches(fixture, sampling);

  RansacConfig config;
  config.seed = 77;
  const FitResult a = ransac_fit(set, config);
  const FitResult b = ransac_fit(set, config);
  EXPECT_EQ(a.inliers, b.inliers);
  EXPECT_EQ(a.iterations, b.iterations);
  const auto va = canonicalize(a.model), vb = canonicalize(b.model);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(va(i), vb(i));
}

TEST(RansacFit, EveryReportedInlierBeatsTheThreshold) {
  const SyntheticFixture fixture = make_two_plane_fixture(5);
  MatchSamplingParams sampling;
  sampling.count = 150;
  sampling.outlier_fraction = 0.3;
  sampling.noise_sigma = 0.5;
  sampling.seed = 21;
  const MatchSet set = sample_matches(fixture, sampling);
  RansacConfig config;
  config.distance_threshold = 2.0;
  config.seed = 1;
  const FitResult fit = ransac_fit(set, config);
  EXPECT_TRUE(std::is_sorted(fit.inliers.begin(), fit.inliers.end()));
  for (int idx : fit.inliers)
    EXPECT_LT(mapping_error(fit.model, set.records[idx]),
              config.distance_threshold);
}

TEST(RansacFit, TooFewRecordsThrow) {
  Rng rng(2);
  const EpipolarModel truth = random_camera_model(rng);
  const MatchSet set = exact_records(truth, 5, rng);
  expect_error([&] { ransac_fit(set, RansacConfig{}); },
               ErrorKind::InsufficientMatches);
}

TEST(RansacFit, AllOutliersYieldNoConsensus) {
  Rng rng(55);
  const EpipolarModel truth = random_camera_model(rng);
  MatchSet set = exact_records(truth, 30, rng);
  for (MatchRecord& rec : set.records)
    rec.q = ImagePoint(rng.uniform(0.0, 640.0), rng.uniform(0.0, 480.0));
  RansacConfig config;
  config.distance_threshold = 1.0;
  expect_error([&] { ransac_fit(set, config); }, ErrorKind::NoConsensus);
}

TEST(EstimateEpipolar, NoiseFreeRecoveryIsExact) {
  const SyntheticFixture fixture = make_two_plane_fixture(6);
  MatchSamplingParams sampling;
  sampling.count = 200;
  sampling.seed = 3;
  const MatchSet set = sample_matches(fixture, sampling);
  const FitResult fit = estimate_epipolar(set, RansacConfig{});
  EXPECT_EQ(fit.inliers.size(), set.records.size());
  EXPECT_LT(fit.mean_mapping_error, 1e-8);
  EXPECT_LT(canonical_gap(ground_truth_model(fixture), fit.model), 1e-6);
}

TEST(EstimateEpipolar, GeneralizesToHeldOutPoints) {
  const SyntheticFixture fixture = make_two_plane_fixture(7);
  MatchSamplingParams sampling;
  sampling.count = 200;
  sampling.outlier_fraction = 0.3;
  sampling.noise_sigma = 0.3;
  sampling.seed = 4;
  const MatchSet noisy = sample_matches(fixture, sampling);

  MatchSamplingParams holdout;
  holdout.count = 100;
  holdout.seed = 5;
  const MatchSet exact = sample_matches(fixture, holdout);

  RansacConfig config;
  config.seed = 6;
  const FitResult fit = estimate_epipolar(noisy, config);
  double mean = 0.0;
  for (const MatchRecord& rec : exact.records)
    mean += mapping_error(fit.model, rec);
  mean /= static_cast<double>(exact.records.size());
  EXPECT_LT(mean, 0.5);
}

TEST(BaselineFit, SinglePlaneIsAHomography) {
  const SyntheticFixture fixture = make_one_plane_fixture(8);
  MatchSamplingParams sampling;
  sampling.count = 100;
  sampling.seed = 7;
  const MatchSet set = sample_matches(fixture, sampling);
  const BaselineReport report =
      baseline_fit(set, RansacConfig{}, BaselineKind::HomographyRansac);
  EXPECT_GE(report.inliers.size(), 99u);
}

TEST(BaselineFit, TwoEqualPlanesSplitTheMethods) {
  const SyntheticFixture fixture = make_two_plane_fixture(9);
  MatchSamplingParams sampling;
  sampling.seed = 8;
  const MatchSet set = sample_matches_stratified(fixture, {50, 50}, sampling);
  ASSERT_EQ(set.records.size(), 100u);

  RansacConfig config;
  config.seed = 11;
  const BaselineReport homography =
      baseline_fit(set, config, BaselineKind::HomographyRansac);
  const BaselineReport multi =
      baseline_fit(set, config, BaselineKind::MultiSamplingRansac);
  const FitResult depth = ransac_fit(set, config);

  // One plane is exactly one homography; the second plane sits ~17 px of
  // parallax away, far outside the 3 px gate.
  EXPECT_LE(homography.inliers.size(), 60u);
  EXPECT_GE(homography.inliers.size(), 45u);
  EXPECT_GE(multi.inliers.size(), 95u);
  EXPECT_GE(multi.rounds, 2);
  EXPECT_GE(depth.inliers.size(), 99u);

  EXPECT_TRUE(std::isfinite(homography.mean_mapping_error));
  EXPECT_TRUE(std::isfinite(multi.mean_mapping_error));
}

TEST(BaselineFit, TooFewRecordsThrow) {
  Rng rng(1);
  const EpipolarModel truth = random_camera_model(rng);
  const MatchSet set = exact_records(truth, 3, rng);
  expect_error(
      [&] {
        baseline_fit(set, RansacConfig{}, BaselineKind::HomographyRansac);
      },
      ErrorKind::InsufficientMatches);
}

}  // namespace
