#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfmttr/error.hpp"
#include "sfmttr/geometry.hpp"
#include "sfmttr/rng.hpp"

namespace sfmttr {

/// One (multi-view depth, network depth) correspondence. index refers back to
/// the entry position in the source SparseDepthFrame.
struct DepthPair {
  double sfm = 0.0;
  double nn = 0.0;
  double reproj_error = 0.0;
  int index = 0;
};

/// Result of the two-stage scale alignment for one frame. scale converts
/// multi-view depths into network units: nn ~= scale * sfm.
struct ScaleAlignment {
  double scale = 0.0;
  double ransac_scale = 0.0;
  std::vector<int> stage1_inliers;
  std::vector<int> stage2_inliers;
  int iterations_used = 0;
  std::uint64_t seed = 0;
};

struct AlignmentConfig {
  double tau = 0.5;
  int ransac_iterations = 20;
  std::uint64_t seed = 0;
  /// Frames with fewer pairs than this, or with a stage-1 inlier ratio below
  /// min_inlier_ratio, are rejected (excluded from refinement).
  int min_points = 5;
  double min_inlier_ratio = 0.2;
};

inline std::vector<DepthPair> pairs_from_frame(const SparseDepthFrame& frame) {
  std::vector<DepthPair> pairs;
  pairs.reserve(frame.entries.size());
  for (std::size_t i = 0; i < frame.entries.size(); ++i) {
    const auto& e = frame.entries[i];
    pairs.push_back({e.sfm_depth, e.nn_depth, e.reproj_error, static_cast<int>(i)});
  }
  return pairs;
}

/// Stage-1 inlier test: squared residual over the scaled depth. Assumes
/// positive depths, so the denominator is positive.
inline double stage1_residual(double scale, const DepthPair& pair) {
  const double scaled = scale * pair.sfm;
  const double r = scaled - pair.nn;
  return r * r / scaled;
}

/// Stage-2 test: absolute value in the numerator, same denominator. Weaker
/// than stage 1 whenever the absolute residual exceeds 1.
inline double stage2_residual(double scale, const DepthPair& pair) {
  const double scaled = scale * pair.sfm;
  return std::abs(scaled - pair.nn) / scaled;
}

/// One-dimensional RANSAC over per-pair scale hypotheses s = nn / sfm. Each
/// iteration samples one pair, scores all pairs against the hypothesis, and
/// the model with the most inliers wins; ties break toward the smaller inlier
/// residual sum. The sampled pair always belongs to its own inlier set.
inline std::pair<double, std::vector<int>> ransac_scale(const std::vector<DepthPair>& pairs,
                                                        double tau, int iterations,
                                                        std::uint64_t seed) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "ransac_scale: no depth pairs");

  Rng rng(seed);
  double best_scale = 0.0;
  std::vector<int> best_inliers;
  double best_residual_sum = std::numeric_limits<double>::infinity();

  std::vector<int> inliers;
  for (int iteration = 0; iteration < iterations; ++iteration) {
    const std::size_t sample = rng.uniform_index(pairs.size());
    const double scale = pairs[sample].nn / pairs[sample].sfm;

    inliers.clear();
    double residual_sum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (i == sample) {
        inliers.push_back(static_cast<int>(i));
        continue;
      }
      const double r = stage1_residual(scale, pairs[i]);
      if (r <= tau) {
        inliers.push_back(static_cast<int>(i));
        residual_sum += r;
      }
    }

    if (inliers.size() > best_inliers.size() ||
        (inliers.size() == best_inliers.size() && residual_sum < best_residual_sum)) {
      best_scale = scale;
      best_inliers = inliers;
      best_residual_sum = residual_sum;
    }
  }

  std::sort(best_inliers.begin(), best_inliers.end());
  return {best_scale, std::move(best_inliers)};
}

/// Closed-form weighted least squares for the scale, weights 1/nn^2 (inverse
/// of the depth-squared variance growth): s = sum(w sfm nn) / sum(w sfm^2).
inline double weighted_ls_scale(const std::vector<DepthPair>& pairs) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "weighted_ls_scale: no depth pairs");
  double numerator = 0.0;
  double denominator = 0.0;
  for (const auto& pair : pairs) {
    const double w = 1.0 / (pair.nn * pair.nn);
    numerator += w * pair.sfm * pair.nn;
    denominator += w * pair.sfm * pair.sfm;
  }
  if (denominator <= 0.0) {
    fail(ErrorCode::DegenerateDenominator, "weighted_ls_scale: sum w sfm^2 = " +
                                               std::to_string(denominator));
  }
  return numerator / denominator;
}

inline std::vector<int> select_final_inliers(const std::vector<DepthPair>& pairs,
                                             double scale, double tau) {
  std::vector<int> inliers;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (stage2_residual(scale, pairs[i]) <= tau) inliers.push_back(static_cast<int>(i));
  }
  return inliers;
}

/// Full two-stage alignment: strict RANSAC fit, weighted least squares on the
/// stage-1 inliers, then the relaxed stage-2 selection over all pairs.
/// Returns nullopt when the frame is too small or the stage-1 inlier ratio is
/// below the acceptance gate; such frames fall back to the unrefined network.
inline std::optional<ScaleAlignment> align_frame_pairs(const std::vector<DepthPair>& pairs,
                                                       const AlignmentConfig& config) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "align_frame: no depth pairs");
  if (static_cast<int>(pairs.size()) < config.min_points) return std::nullopt;

  auto [ransac_s, stage1] =
      ransac_scale(pairs, config.tau, config.ransac_iterations, config.seed);
  if (static_cast<double>(stage1.size()) <
      config.min_inlier_ratio * static_cast<double>(pairs.size())) {
    return std::nullopt;
  }

  std::vector<DepthPair> stage1_pairs;
  stage1_pairs.reserve(stage1.size());
  for (int i : stage1) stage1_pairs.push_back(pairs[i]);
  const double scale = weighted_ls_scale(stage1_pairs);

  ScaleAlignment alignment;
  alignment.scale = scale;
  alignment.ransac_scale = ransac_s;
  alignment.stage1_inliers = std::move(stage1);
  alignment.stage2_inliers = select_final_inliers(pairs, scale, config.tau);
  alignment.iterations_used = config.ransac_iterations;
  alignment.seed = config.seed;
  return alignment;
}

inline std::optional<ScaleAlignment> align_frame(const SparseDepthFrame& frame,
                                                 const AlignmentConfig& config) {
  if (frame.entries.empty()) fail(ErrorCode::EmptyInput, "align_frame: empty frame");
  return align_frame_pairs(pairs_from_frame(frame), config);
}

/// Median of the per-pair nn/sfm ratios; even counts average the two central
/// values. The per-frame half of the median-scaling ablation baseline.
inline double align_median(const std::vector<DepthPair>& pairs) {
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "align_median: no depth pairs");
  std::vector<double> ratios;
  ratios.reserve(pairs.size());
  for (const auto& pair : pairs) ratios.push_back(pair.nn / pair.sfm);
  std::sort(ratios.begin(), ratios.end());
  const std::size_t n = ratios.size();
  if (n % 2 == 1) return ratios[n / 2];
  return 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
}

inline nlohmann::json alignment_to_json(int image_id, const ScaleAlignment& alignment) {
  return {{"image_id", image_id},
          {"scale", alignment.scale},
          {"ransac_scale", alignment.ransac_scale},
          {"stage1_inlier_indices", alignment.stage1_inliers},
          {"stage2_inlier_indices", alignment.stage2_inliers},
          {"seed", alignment.seed}};
}

inline ScaleAlignment alignment_from_json(const nlohmann::json& j, int* image_id = nullptr) {
  ScaleAlignment alignment;
  alignment.scale = j.at("scale").get<double>();
  alignment.ransac_scale = j.at("ransac_scale").get<double>();
  alignment.stage1_inliers = j.at("stage1_inlier_indices").get<std::vector<int>>();
  alignment.stage2_inliers = j.at("stage2_inlier_indices").get<std::vector<int>>();
  alignment.seed = j.at("seed").get<std::uint64_t>();
  if (image_id != nullptr) *image_id = j.at("image_id").get<int>();
  return alignment;
}

}  // namespace sfmttr
