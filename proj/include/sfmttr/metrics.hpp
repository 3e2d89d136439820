#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfmttr/error.hpp"
#include "sfmttr/geometry.hpp"
#include "sfmttr/io_util.hpp"

namespace sfmttr {

/// The seven standard monocular-depth measures plus the evaluated pixel count.
struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  long valid_pixel_count = 0;
};

enum class CropType { kNone, kEigen };
enum class ScalingType { kMedian, kNone, kPrecomputed };

struct EvalConfig {
  double max_depth = 80.0;
  double min_depth = 1e-3;
  CropType crop = CropType::kNone;
  ScalingType scaling = ScalingType::kMedian;
  /// Used when scaling == kPrecomputed.
  double precomputed_scale = 1.0;
};

struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  PixelMask() = default;
  PixelMask(int w, int h, bool fill = false)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) {
    values[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(values.begin(), values.end(), 1));
  }
};

/// Community-standard evaluation crop: rows [0.40810811 H, 0.99189189 H),
/// cols [0.03594771 W, 0.96405229 W), bounds floored.
inline PixelMask eigen_crop_mask(int height, int width) {
  PixelMask mask(width, height, false);
  const int row_lo = static_cast<int>(std::floor(0.40810811 * height));
  const int row_hi = static_cast<int>(std::floor(0.99189189 * height));
  const int col_lo = static_cast<int>(std::floor(0.03594771 * width));
  const int col_hi = static_cast<int>(std::floor(0.96405229 * width));
  for (int y = row_lo; y < row_hi; ++y) {
    for (int x = col_lo; x < col_hi; ++x) mask.set(x, y, true);
  }
  return mask;
}

namespace detail {

/// Median with the even-count convention: mean of the two central values.
inline double median_inplace(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Pixels that participate in evaluation: valid ground truth strictly inside
/// (min_depth, max_depth), a valid prediction, and inside the crop.
inline PixelMask evaluation_mask(const DepthMap& pred, const DepthMap& gt,
                                 const EvalConfig& config) {
  PixelMask crop = config.crop == CropType::kEigen
                       ? eigen_crop_mask(gt.height(), gt.width())
                       : PixelMask(gt.width(), gt.height(), true);
  PixelMask mask(gt.width(), gt.height(), false);
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!crop.at(x, y) || !gt.valid(x, y) || !pred.valid(x, y)) continue;
      const double g = gt.at(x, y);
      if (g > config.min_depth && g < config.max_depth) mask.set(x, y, true);
    }
  }
  return mask;
}

inline double scaling_factor(const DepthMap& pred, const DepthMap& gt,
                             const PixelMask& mask, const EvalConfig& config) {
  switch (config.scaling) {
    case ScalingType::kNone:
      return 1.0;
    case ScalingType::kPrecomputed:
      return config.precomputed_scale;
    case ScalingType::kMedian: {
      std::vector<double> gt_values;
      std::vector<double> pred_values;
      for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
          if (!mask.at(x, y)) continue;
          gt_values.push_back(gt.at(x, y));
          pred_values.push_back(pred.at(x, y));
        }
      }
      if (gt_values.empty()) fail(ErrorCode::EmptyMask, "median scaling: empty mask");
      const double pred_median = median_inplace(pred_values);
      const double gt_median = median_inplace(gt_values);
      if (pred_median == 0.0) {
        fail(ErrorCode::ZeroMedian, "median scaling: prediction median is zero");
      }
      return gt_median / pred_median;
    }
  }
  return 1.0;
}

/// Metric accumulation over masked pixels; pred values are pre-scaled and
/// clamped here.
inline DepthMetrics accumulate(const DepthMap& pred, const DepthMap& gt,
                               const PixelMask& mask, double scale,
                               const EvalConfig& config) {
  double abs_rel = 0.0, sq_rel = 0.0, sq = 0.0, sq_log = 0.0;
  long d1 = 0, d2 = 0, d3 = 0, count = 0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const double g = gt.at(x, y);
      const double p =
          std::clamp(pred.at(x, y) * scale, config.min_depth, config.max_depth);
      const double diff = p - g;
      abs_rel += std::abs(diff) / g;
      sq_rel += diff * diff / g;
      sq += diff * diff;
      sq_log += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
      const double ratio = std::max(p / g, g / p);
      if (ratio < 1.25) ++d1;
      if (ratio < 1.25 * 1.25) ++d2;
      if (ratio < 1.25 * 1.25 * 1.25) ++d3;
      ++count;
    }
  }
  if (count == 0) fail(ErrorCode::EmptyMask, "no pixels to evaluate");
  const double n = static_cast<double>(count);
  DepthMetrics metrics;
  metrics.abs_rel = abs_rel / n;
  metrics.sq_rel = sq_rel / n;
  metrics.rmse = std::sqrt(sq / n);
  metrics.rmse_log = std::sqrt(sq_log / n);
  metrics.delta1 = d1 / n;
  metrics.delta2 = d2 / n;
  metrics.delta3 = d3 / n;
  metrics.valid_pixel_count = count;
  return metrics;
}

}  // namespace detail

/// Multiplies pred by median(gt over mask) / median(pred over mask).
inline DepthMap median_scale(const DepthMap& pred, const DepthMap& gt,
                             const PixelMask& mask) {
  if (mask.count() == 0) fail(ErrorCode::EmptyMask, "median_scale: empty mask");
  EvalConfig config;
  config.scaling = ScalingType::kMedian;
  const double factor = detail::scaling_factor(pred, gt, mask, config);
  DepthMap scaled = pred;
  for (double& v : scaled.values()) v *= factor;
  return scaled;
}

inline DepthMetrics compute_metrics(const DepthMap& pred, const DepthMap& gt,
                                    const EvalConfig& config) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    fail(ErrorCode::ShapeMismatch,
         "pred " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
             " vs gt " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  }
  const PixelMask mask = detail::evaluation_mask(pred, gt, config);
  if (mask.count() == 0) fail(ErrorCode::EmptyMask, "no pixels to evaluate");
  const double scale = detail::scaling_factor(pred, gt, mask, config);
  return detail::accumulate(pred, gt, mask, scale, config);
}

struct DepthBinMetrics {
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  bool empty = true;
  DepthMetrics metrics;  // meaningful only when !empty
};

/// Per-depth-range metrics over [edge_i, edge_{i+1}) bins of the ground
/// truth. Scaling is resolved once over the whole evaluation mask, so bins
/// recombine exactly into the whole-image mean-based metrics.
inline std::vector<DepthBinMetrics> binned_metrics(const DepthMap& pred, const DepthMap& gt,
                                                   const EvalConfig& config,
                                                   const std::vector<double>& bin_edges) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    fail(ErrorCode::ShapeMismatch, "binned_metrics: resolution mismatch");
  }
  if (bin_edges.size() < 2) fail(ErrorCode::BadBinEdges, "need at least 2 bin edges");
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) {
      fail(ErrorCode::BadBinEdges, "bin edges must be strictly increasing");
    }
  }
  if (bin_edges.front() < config.min_depth || bin_edges.back() > config.max_depth) {
    fail(ErrorCode::BadBinEdges, "bin edges must lie within [min_depth, max_depth]");
  }

  const PixelMask mask = detail::evaluation_mask(pred, gt, config);
  if (mask.count() == 0) fail(ErrorCode::EmptyMask, "no pixels to evaluate");
  const double scale = detail::scaling_factor(pred, gt, mask, config);

  std::vector<DepthBinMetrics> bins;
  bins.reserve(bin_edges.size() - 1);
  for (std::size_t b = 0; b + 1 < bin_edges.size(); ++b) {
    DepthBinMetrics bin;
    bin.bin_lo = bin_edges[b];
    bin.bin_hi = bin_edges[b + 1];
    PixelMask bin_mask = mask;
    for (int y = 0; y < gt.height(); ++y) {
      for (int x = 0; x < gt.width(); ++x) {
        if (!bin_mask.at(x, y)) continue;
        const double g = gt.at(x, y);
        if (!(g >= bin.bin_lo && g < bin.bin_hi)) bin_mask.set(x, y, false);
      }
    }
    if (bin_mask.count() > 0) {
      bin.empty = false;
      bin.metrics = detail::accumulate(pred, gt, bin_mask, scale, config);
    }
    bins.push_back(bin);
  }
  return bins;
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

inline nlohmann::json metrics_to_json(const DepthMetrics& m) {
  return {{"abs_rel", m.abs_rel},     {"sq_rel", m.sq_rel},
          {"rmse", m.rmse},           {"rmse_log", m.rmse_log},
          {"delta1", m.delta1},       {"delta2", m.delta2},
          {"delta3", m.delta3},       {"valid_pixel_count", m.valid_pixel_count}};
}

inline constexpr const char* kMetricsCsvHeader =
    "name,abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,valid_pixel_count";

inline std::string metrics_csv_row(const std::string& name, const DepthMetrics& m) {
  const auto& fmt = detail::format_double;
  return name + "," + fmt(m.abs_rel) + "," + fmt(m.sq_rel) + "," + fmt(m.rmse) + "," +
         fmt(m.rmse_log) + "," + fmt(m.delta1) + "," + fmt(m.delta2) + "," +
         fmt(m.delta3) + "," + std::to_string(m.valid_pixel_count);
}

inline constexpr const char* kBinsCsvHeader =
    "bin_lo,bin_hi,abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,count";

inline std::string bin_csv_row(const DepthBinMetrics& bin) {
  const auto& fmt = detail::format_double;
  std::string row = fmt(bin.bin_lo) + "," + fmt(bin.bin_hi) + ",";
  if (bin.empty) {
    row += ",,,,,,,0";
  } else {
    const auto& m = bin.metrics;
    row += fmt(m.abs_rel) + "," + fmt(m.sq_rel) + "," + fmt(m.rmse) + "," +
           fmt(m.rmse_log) + "," + fmt(m.delta1) + "," + fmt(m.delta2) + "," +
           fmt(m.delta3) + "," + std::to_string(m.valid_pixel_count);
  }
  return row;
}

/// Unweighted mean of per-image metrics (the usual test-set aggregation).
inline DepthMetrics aggregate_metrics(const std::vector<DepthMetrics>& per_image) {
  if (per_image.empty()) fail(ErrorCode::EmptyInput, "aggregate_metrics: no images");
  DepthMetrics total;
  for (const auto& m : per_image) {
    total.abs_rel += m.abs_rel;
    total.sq_rel += m.sq_rel;
    total.rmse += m.rmse;
    total.rmse_log += m.rmse_log;
    total.delta1 += m.delta1;
    total.delta2 += m.delta2;
    total.delta3 += m.delta3;
    total.valid_pixel_count += m.valid_pixel_count;
  }
  const double n = static_cast<double>(per_image.size());
  total.abs_rel /= n;
  total.sq_rel /= n;
  total.rmse /= n;
  total.rmse_log /= n;
  total.delta1 /= n;
  total.delta2 /= n;
  total.delta3 /= n;
  return total;
}

}  // namespace sfmttr
