#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "sfmttr/alignment.hpp"
#include "sfmttr/synth.hpp"

using namespace sfmttr;
using oracles::golden_section_scale;

namespace {

std::vector<DepthPair> make_pairs(std::initializer_list<std::pair<double, double>> values) {
  std::vector<DepthPair> pairs;
  int index = 0;
  for (const auto& [sfm, nn] : values) pairs.push_back({sfm, nn, 0.0, index++});
  return pairs;
}

}  // namespace

TEST_CASE("ransac recovers an exact common scale with zero residuals", "[alignment]") {
  const auto pairs = make_pairs({{1, 2}, {3, 6}, {10, 20}});
  const auto [scale, inliers] = ransac_scale(pairs, 0.5, 20, 1);
  CHECK(scale == 2.0);
  CHECK(inliers == std::vector<int>{0, 1, 2});
}

TEST_CASE("stage-1 residual matches hand evaluation", "[alignment]") {
  // s = 2, (sfm 10, nn 17): (20 - 17)^2 / 20 = 0.45 <= 0.5 -> inlier.
  CHECK(stage1_residual(2.0, {10.0, 17.0, 0.0, 0}) == Catch::Approx(0.45));
  // (sfm 10, nn 16): (20 - 16)^2 / 20 = 0.8 > 0.5 -> outlier.
  CHECK(stage1_residual(2.0, {10.0, 16.0, 0.0, 0}) == Catch::Approx(0.8));
}

TEST_CASE("ransac keeps the 0.45-residual pair and rejects the 0.8 one", "[alignment]") {
  const auto pairs = make_pairs({{1, 2}, {3, 6}, {5, 10}, {10, 20}, {10, 17}, {10, 16}});
  const auto [scale, inliers] = ransac_scale(pairs, 0.5, 20, 3);
  CHECK(scale == 2.0);
  CHECK(inliers == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("single-pair ransac: the pair is its own sole inlier", "[alignment]") {
  const auto pairs = make_pairs({{4, 8}});
  const auto [scale, inliers] = ransac_scale(pairs, 0.5, 20, 7);
  CHECK(scale == 2.0);
  CHECK(inliers == std::vector<int>{0});
  CHECK_THROWS_AS(ransac_scale({}, 0.5, 20, 7), Error);
}

TEST_CASE("weighted least squares closed form", "[alignment]") {
  CHECK(weighted_ls_scale(make_pairs({{1, 2}, {2, 4}})) == Catch::Approx(2.0));
  // (0.5 + 1/3) / (0.25 + 1/9) = 2.307692...
  CHECK(weighted_ls_scale(make_pairs({{1, 2}, {1, 3}})) ==
        Catch::Approx(2.3076923076923075).margin(1e-12));
  CHECK(weighted_ls_scale(make_pairs({{7, 3}})) == Catch::Approx(3.0 / 7.0));
  CHECK_THROWS_AS(weighted_ls_scale({}), Error);
}

TEST_CASE("closed form matches golden-section minimization", "[alignment]") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<DepthPair> pairs;
    const int n = 2 + static_cast<int>(rng.uniform_index(30));
    for (int i = 0; i < n; ++i) {
      const double sfm = rng.uniform(0.1, 50.0);
      const double nn = sfm * rng.uniform(0.2, 5.0);
      pairs.push_back({sfm, nn, 0.0, i});
    }
    const double closed = weighted_ls_scale(pairs);
    const double oracle = golden_section_scale(pairs);
    CHECK(std::abs(closed - oracle) <= 1e-9 * std::abs(oracle));
  }
}

TEST_CASE("stage-2 selection relaxes stage 1", "[alignment]") {
  // s = 2, (10, 16): |20 - 16| / 20 = 0.2 <= 0.5, a stage-2 inlier although
  // it fails the stage-1 test (0.8).
  const auto pairs = make_pairs({{10, 16}, {10, 20}, {10, 35}});
  const auto inliers = select_final_inliers(pairs, 2.0, 0.5);
  CHECK(inliers == std::vector<int>{0, 1});  // (10, 35): 15/20 = 0.75 > 0.5
}

TEST_CASE("align_frame on a noiseless frame recovers scale 1 exactly", "[alignment]") {
  SparseDepthFrame frame;
  frame.image_id = 1;
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const double d = rng.uniform(1.0, 30.0);
    frame.entries.push_back({{0.0, 0.0}, d, d, 0.0, i});
  }
  AlignmentConfig config;
  config.seed = 17;
  const auto alignment = align_frame(frame, config);
  REQUIRE(alignment.has_value());
  CHECK(std::abs(alignment->scale - 1.0) <= 1e-12);
  CHECK(alignment->stage2_inliers.size() == frame.entries.size());
  // Relaxation: noiseless stage-1 inliers are a subset of stage-2 inliers.
  for (int i : alignment->stage1_inliers) {
    CHECK(std::find(alignment->stage2_inliers.begin(), alignment->stage2_inliers.end(),
                    i) != alignment->stage2_inliers.end());
  }
}

TEST_CASE("frames below the acceptance gates are rejected softly", "[alignment]") {
  SparseDepthFrame frame;
  frame.image_id = 2;
  frame.entries = {{{0, 0}, 1, 2, 0, 0}, {{0, 0}, 2, 4, 0, 1}, {{0, 0}, 3, 6, 0, 2}};
  AlignmentConfig config;
  config.min_points = 5;
  CHECK_FALSE(align_frame(frame, config).has_value());

  SparseDepthFrame empty;
  empty.image_id = 3;
  CHECK_THROWS_AS(align_frame(empty, config), Error);
}

TEST_CASE("noisy heteroscedastic frame with outliers: scale within 2%", "[alignment]") {
  NoiseConfig noise;  // 5% at far depth, 20% outliers
  const auto [pairs, flags] = make_depth_pairs(200, 3.7, 20.0, 60.0, noise, 99);
  AlignmentConfig config;
  config.seed = 100;
  const auto alignment = align_frame_pairs(pairs, config);
  REQUIRE(alignment.has_value());
  CHECK(std::abs(alignment->scale / 3.7 - 1.0) < 0.02);
}

TEST_CASE("align_median: ratio median with even-count averaging", "[alignment]") {
  CHECK(align_median(make_pairs({{1, 2}, {3, 6}, {10, 20}})) == 2.0);
  CHECK(align_median(make_pairs({{1, 2}, {1, 4}})) == 3.0);
  CHECK_THROWS_AS(align_median({}), Error);
}

TEST_CASE("scale equivariance: rescaling sfm rescales the estimate inversely",
          "[alignment]") {
  Rng rng(23);
  NoiseConfig noise;
  const auto [pairs, flags] = make_depth_pairs(120, 2.5, 10.0, 40.0, noise, 31);
  for (double k : {0.25, 3.0, 17.0}) {
    std::vector<DepthPair> scaled = pairs;
    for (auto& p : scaled) p.sfm *= k;

    AlignmentConfig config;
    config.seed = 5;
    const auto base = align_frame_pairs(pairs, config);
    const auto moved = align_frame_pairs(scaled, config);
    REQUIRE(base.has_value());
    REQUIRE(moved.has_value());
    CHECK(moved->ransac_scale == Catch::Approx(base->ransac_scale / k).epsilon(1e-12));
    CHECK(moved->scale == Catch::Approx(base->scale / k).epsilon(1e-12));
    CHECK(moved->stage1_inliers == base->stage1_inliers);
    CHECK(moved->stage2_inliers == base->stage2_inliers);
  }
}

TEST_CASE("joint rescaling: stage-2 membership invariant, stage-1 residual is not",
          "[alignment]") {
  const DepthPair near_threshold{10.0, 17.0, 0.0, 0};  // stage-1 residual 0.45 at s = 2
  const double k = 2.0;
  const DepthPair scaled{near_threshold.sfm * k, near_threshold.nn * k, 0.0, 0};

  // Stage-1 residual scales with k: 0.45 -> 0.9, crossing tau = 0.5.
  CHECK(stage1_residual(2.0, near_threshold) == Catch::Approx(0.45));
  CHECK(stage1_residual(2.0, scaled) == Catch::Approx(0.9));

  // Stage-2 relative test is invariant under joint rescaling.
  CHECK(stage2_residual(2.0, near_threshold) == Catch::Approx(stage2_residual(2.0, scaled)));

  const auto pairs = make_pairs({{10, 16}, {10, 20}, {10, 35}, {5, 10}});
  std::vector<DepthPair> joint = pairs;
  for (auto& p : joint) {
    p.sfm *= k;
    p.nn *= k;
  }
  CHECK(select_final_inliers(pairs, 2.0, 0.5) == select_final_inliers(joint, 2.0, 0.5));
}

TEST_CASE("identical inputs and seed give bit-identical alignments", "[alignment]") {
  NoiseConfig noise;
  const auto [pairs, flags] = make_depth_pairs(150, 1.4, 5.0, 45.0, noise, 77);
  AlignmentConfig config;
  config.seed = 1234;
  const auto a = align_frame_pairs(pairs, config);
  const auto b = align_frame_pairs(pairs, config);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->scale == b->scale);
  CHECK(a->ransac_scale == b->ransac_scale);
  CHECK(a->stage1_inliers == b->stage1_inliers);
  CHECK(a->stage2_inliers == b->stage2_inliers);
  CHECK(a->seed == b->seed);
}

TEST_CASE("robust alignment beats the ratio median on skewed noisy frames",
          "[alignment]") {
  // Smoke-scale version of the Monte-Carlo ablation (the acceptance suite
  // runs the full 100 trials).
  NoiseConfig noise;
  int robust_wins = 0;
  const int trials = 25;
  for (int t = 0; t < trials; ++t) {
    const auto [pairs, flags] =
        make_depth_pairs(200, 3.7, 20.0, 60.0, noise, 9000 + static_cast<std::uint64_t>(t));
    AlignmentConfig config;
    config.seed = 500 + static_cast<std::uint64_t>(t);
    const auto alignment = align_frame_pairs(pairs, config);
    REQUIRE(alignment.has_value());
    const double robust_err = std::abs(alignment->scale / 3.7 - 1.0);
    const double median_err = std::abs(align_median(pairs) / 3.7 - 1.0);
    if (robust_err < median_err) ++robust_wins;
  }
  CHECK(robust_wins >= trials * 4 / 5);
}
