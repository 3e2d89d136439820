#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sfmttr/alignment.hpp"
#include "sfmttr/metrics.hpp"

namespace oracles {

/// Golden-section minimization of the weighted least-squares objective
/// sum w (s sfm - nn)^2 with w = 1/nn^2. The minimizer is a weighted average
/// of the ratios nn/sfm, so it lies inside their hull. Comparing objective
/// values cannot localize a smooth minimum beyond ~sqrt(eps) relative, so the
/// bracket is finished with one parabolic vertex step; the objective is a
/// parabola in s, which makes that step exact up to rounding.
inline double golden_section_scale(const std::vector<sfmttr::DepthPair>& pairs) {
  auto objective = [&pairs](double s) {
    double total = 0.0;
    for (const auto& p : pairs) {
      const double w = 1.0 / (p.nn * p.nn);
      const double r = s * p.sfm - p.nn;
      total += w * r * r;
    }
    return total;
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& p : pairs) {
    lo = std::min(lo, p.nn / p.sfm);
    hi = std::max(hi, p.nn / p.sfm);
  }
  lo *= 0.5;
  hi *= 2.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  for (int i = 0; i < 30; ++i) {
    const double c = b - phi * (b - a);
    const double d = a + phi * (b - a);
    if (objective(c) < objective(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  const double m = 0.5 * (a + b);
  const double fa = objective(a);
  const double fm = objective(m);
  const double fb = objective(b);
  const double num = (m - a) * (m - a) * (fm - fb) - (m - b) * (m - b) * (fm - fa);
  const double den = (m - a) * (fm - fb) - (m - b) * (fm - fa);
  if (den == 0.0) return m;
  return m - 0.5 * num / den;
}

/// Naive per-pixel accumulation of the depth metrics: collect values into
/// vectors, then apply every formula directly. Requires a non-empty mask.
inline sfmttr::DepthMetrics brute_force_metrics(const sfmttr::DepthMap& pred,
                                                const sfmttr::DepthMap& gt,
                                                const sfmttr::EvalConfig& config) {
  int row_lo = 0, row_hi = gt.height(), col_lo = 0, col_hi = gt.width();
  if (config.crop == sfmttr::CropType::kEigen) {
    row_lo = static_cast<int>(std::floor(0.40810811 * gt.height()));
    row_hi = static_cast<int>(std::floor(0.99189189 * gt.height()));
    col_lo = static_cast<int>(std::floor(0.03594771 * gt.width()));
    col_hi = static_cast<int>(std::floor(0.96405229 * gt.width()));
  }

  std::vector<double> ps, gs;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (y < row_lo || y >= row_hi || x < col_lo || x >= col_hi) continue;
      if (!gt.valid(x, y) || !pred.valid(x, y)) continue;
      const double g = gt.at(x, y);
      if (!(g > config.min_depth && g < config.max_depth)) continue;
      ps.push_back(pred.at(x, y));
      gs.push_back(g);
    }
  }

  double factor = 1.0;
  if (config.scaling == sfmttr::ScalingType::kMedian) {
    auto exhaustive_median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return v.size() % 2 == 1 ? v[v.size() / 2]
                               : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    };
    factor = exhaustive_median(gs) / exhaustive_median(ps);
  } else if (config.scaling == sfmttr::ScalingType::kPrecomputed) {
    factor = config.precomputed_scale;
  }

  sfmttr::DepthMetrics m;
  m.valid_pixel_count = static_cast<long>(ps.size());
  const double n = static_cast<double>(ps.size());
  double sq = 0.0, sq_log = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    double p = ps[i] * factor;
    p = std::min(std::max(p, config.min_depth), config.max_depth);
    const double g = gs[i];
    m.abs_rel += std::abs(p - g) / g / n;
    m.sq_rel += (p - g) * (p - g) / g / n;
    sq += (p - g) * (p - g) / n;
    sq_log += std::pow(std::log(p) - std::log(g), 2) / n;
    const double ratio = std::max(p / g, g / p);
    m.delta1 += (ratio < 1.25) / n;
    m.delta2 += (ratio < 1.25 * 1.25) / n;
    m.delta3 += (ratio < std::pow(1.25, 3)) / n;
  }
  m.rmse = std::sqrt(sq);
  m.rmse_log = std::sqrt(sq_log);
  return m;
}

}  // namespace oracles
