#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sfmttr/alignment.hpp"
#include "sfmttr/colmap_io.hpp"
#include "sfmttr/depth_io.hpp"
#include "sfmttr/error.hpp"
#include "sfmttr/geometry.hpp"
#include "sfmttr/reconstruction.hpp"
#include "sfmttr/rng.hpp"
#include "sfmttr/tensor.hpp"

namespace sfmttr {

enum class CameraPathType { kForward, kOrbit };

struct SceneConfig {
  int n_images = 5;
  int n_points = 300;
  CameraPathType camera_path = CameraPathType::kForward;
  int image_width = 64;
  int image_height = 64;
  double focal_length = 48.0;
  /// Default scene depths are sized so that depths divided by a moderate
  /// gt_scale stay inside the responsive region of the reference model's
  /// inverse-depth head.
  double depth_near = 0.5;
  double depth_far = 6.0;
  /// Scale relating network units to scene units: pseudo-network maps are
  /// gt / gt_scale, so alignment should recover s = 1 / gt_scale.
  double gt_scale = 1.0;
};

/// Ground-truth multi-view scene: exact reconstruction (zero reprojection
/// error), per-image dense depth maps consistent with the 3-D points at their
/// projections, and the global network/SfM scale.
struct SyntheticScene {
  Reconstruction reconstruction;
  std::vector<DepthMap> gt_depth_maps;  // ordered by ascending image_id
  double gt_scale = 1.0;
  std::uint64_t seed = 0;
  SceneConfig config;

  const DepthMap& gt_map(int image_id) const {
    return gt_depth_maps.at(static_cast<std::size_t>(image_id - 1));
  }
};

/// Depth corruption model. Depth noise is multiplicative with standard
/// deviation sigma * d / d_far (absolute std sigma * d^2 / d_far), so the
/// relative error grows linearly with depth. An outlier_fraction of points is
/// replaced by uniform multiplicative draws from [outlier_min, outlier_max].
struct NoiseConfig {
  double sfm_rel_sigma = 0.05;
  double nn_rel_sigma = 0.05;
  double outlier_fraction = 0.2;
  double outlier_min = 0.2;
  double outlier_max = 5.0;
  double reproj_noise_sigma = 0.4;  // pixels
  /// Amplitude of the smooth multiplicative bias field applied to the
  /// pseudo-network maps (sum of 3 low-frequency sinusoids).
  double bias_amplitude = 0.0;
};

namespace detail {

inline void check_noise_config(const NoiseConfig& noise) {
  if (noise.sfm_rel_sigma < 0.0 || noise.nn_rel_sigma < 0.0 ||
      noise.reproj_noise_sigma < 0.0 || noise.bias_amplitude < 0.0) {
    fail(ErrorCode::InvalidConfig, "noise sigmas must be non-negative");
  }
  if (noise.outlier_fraction < 0.0 || noise.outlier_fraction >= 0.5) {
    fail(ErrorCode::InvalidConfig, "outlier_fraction must lie in [0, 0.5)");
  }
  if (noise.outlier_fraction > 0.0 &&
      (!(noise.outlier_min > 0.0) || !(noise.outlier_max > noise.outlier_min))) {
    fail(ErrorCode::InvalidConfig, "outlier_range must satisfy 0 < min < max");
  }
}

/// Smooth multiplicative field: 1 + sum of 3 seeded low-frequency sinusoids,
/// each with amplitude bias_amplitude / 3. Frequencies stay below one cycle
/// per image so the field is low-frequency structure, not texture.
class BiasField {
 public:
  BiasField(double amplitude, Rng& rng) {
    for (int k = 0; k < 3; ++k) {
      amp_[k] = amplitude / 3.0;
      fu_[k] = rng.uniform(0.35, 1.1);
      fv_[k] = rng.uniform(0.35, 1.1);
      phase_[k] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    }
  }

  double at(double u_norm, double v_norm) const {
    double value = 1.0;
    for (int k = 0; k < 3; ++k) {
      value += amp_[k] * std::sin(2.0 * 3.14159265358979323846 *
                                      (fu_[k] * u_norm + fv_[k] * v_norm) +
                                  phase_[k]);
    }
    return value;
  }

 private:
  double amp_[3] = {0, 0, 0};
  double fu_[3] = {0, 0, 0};
  double fv_[3] = {0, 0, 0};
  double phase_[3] = {0, 0, 0};
};

inline CameraPose synth_pose(const SceneConfig& config, int index) {
  if (config.camera_path == CameraPathType::kForward) {
    // Forward translation along +z with small lateral offsets; identity
    // rotation. Camera i sits behind camera i+1; the step is proportional to
    // the depth range so visibility windows overlap across the sequence.
    const double baseline = 0.015 * (config.depth_far - config.depth_near);
    CameraPose pose;
    pose.rotation = Eigen::Matrix3d::Identity();
    const double lateral = 0.3 * baseline * std::sin(1.7 * index);
    const double vertical = 0.2 * baseline * std::cos(2.3 * index);
    pose.translation =
        Eigen::Vector3d(lateral, vertical, -baseline * (config.n_images - 1 - index));
    return pose;
  }
  // Orbit: cameras on an arc looking at the point cloud centroid region,
  // which sits ahead at mid depth.
  const double mid = 0.5 * (config.depth_near + config.depth_far);
  const double arc = 0.5;  // radians of total arc
  const double angle = arc * (static_cast<double>(index) / std::max(config.n_images - 1, 1) - 0.5);
  const Eigen::Vector3d target(0.0, 0.0, mid);
  const double radius = 0.25 * mid;
  const Eigen::Vector3d center =
      target + Eigen::Vector3d(radius * std::sin(angle), 0.0, -mid + radius * (1.0 - std::cos(angle)));
  const Eigen::Vector3d forward = (target - center).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d(0.0, -1.0, 0.0)).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  CameraPose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.translation = center;
  return pose;
}

}  // namespace detail

/// Builds a deterministic synthetic scene: seeded camera path, 3-D points
/// sampled inverse-depth-uniform inside view frustums (denser near, matching
/// real depth statistics), tracks over every image that sees the point inside
/// the depth window, and dense gt maps rendered as a smooth analytic
/// background with exact constant-patch splats at every track observation, so
/// bilinear sampling at a projection returns the point depth exactly.
inline SyntheticScene generate_scene(const SceneConfig& config, std::uint64_t seed) {
  if (config.n_images < 2 || config.n_points < 1) {
    fail(ErrorCode::InvalidConfig, "scene needs >= 2 images and >= 1 point");
  }
  if (!(config.depth_near > 0.0) || !(config.depth_far > config.depth_near)) {
    fail(ErrorCode::InvalidConfig, "depth range must satisfy 0 < near < far");
  }
  if (!(config.gt_scale > 0.0)) {
    fail(ErrorCode::InvalidConfig, "gt_scale must be positive");
  }

  Rng rng(seed);
  SyntheticScene scene;
  scene.gt_scale = config.gt_scale;
  scene.seed = seed;
  scene.config = config;

  CameraIntrinsics intrinsics;
  intrinsics.camera_id = 1;
  intrinsics.model = CameraModelId::kPinhole;
  intrinsics.width = static_cast<std::uint64_t>(config.image_width);
  intrinsics.height = static_cast<std::uint64_t>(config.image_height);
  intrinsics.fx = intrinsics.fy = config.focal_length;
  intrinsics.cx = 0.5 * (config.image_width - 1);
  intrinsics.cy = 0.5 * (config.image_height - 1);
  scene.reconstruction.cameras[1] = intrinsics;

  std::vector<CameraPose> poses;
  for (int j = 0; j < config.n_images; ++j) {
    const CameraPose pose = detail::synth_pose(config, j);
    poses.push_back(pose);
    PosedImage image;
    image.image_id = j + 1;
    image.camera_id = 1;
    image.name = "synth_" + std::to_string(j + 1) + ".pfm";
    const Eigen::Matrix3d r_wc = pose.rotation.transpose();
    image.rotation = Eigen::Quaterniond(r_wc);
    image.rotation.normalize();
    image.translation = -(r_wc * pose.translation);
    scene.reconstruction.images[image.image_id] = image;
  }

  // Keep the splat footprint away from the border so bilinear samples stay
  // interior.
  const double margin = 1.0;
  const double u_max = config.image_width - 1 - margin;
  const double v_max = config.image_height - 1 - margin;

  // Depths come from a smooth per-scene field over the anchor image plane
  // plus a small jitter: spatially coherent like points triangulated on real
  // surfaces, and inverse-depth distributed over image area (near depths
  // cover more pixels). Independent per-point draws would make the depth
  // field spatially white and no smooth predictor could follow it.
  detail::BiasField depth_field(0.9, rng);
  const double inv_near = 1.0 / config.depth_near;
  const double inv_far = 1.0 / config.depth_far;
  auto field_depth = [&](double u, double v, double jitter) {
    const double raw = depth_field.at(u / (config.image_width - 1),
                                      v / (config.image_height - 1));
    const double t = std::clamp((raw - 0.1) / 1.8, 0.0, 1.0);
    const double inv = inv_far + (inv_near - inv_far) * (0.05 + 0.9 * t);
    const double depth = (1.0 / inv) * (1.0 + jitter);
    return std::clamp(depth, config.depth_near, config.depth_far);
  };

  struct Candidate {
    Eigen::Vector3d position;
    std::vector<std::pair<int, Eigen::Vector2d>> views;  // (image_id, pixel)
    std::array<std::uint8_t, 3> color;
  };
  // All points are sampled from the middle camera's frustum so the depth
  // field warps as one smooth map into every other view.
  std::vector<Candidate> candidates;
  const int anchor = config.n_images / 2;
  for (int i = 0; i < config.n_points; ++i) {
    const double u = rng.uniform(margin, u_max);
    const double v = rng.uniform(margin, v_max);
    const double depth = field_depth(u, v, 0.03 * rng.normal());
    Candidate cand;
    cand.position = backproject(intrinsics, poses[anchor], {u, v}, depth);
    cand.color = {static_cast<std::uint8_t>(rng.uniform_index(256)),
                  static_cast<std::uint8_t>(rng.uniform_index(256)),
                  static_cast<std::uint8_t>(rng.uniform_index(256))};
    for (int j = 0; j < config.n_images; ++j) {
      const Eigen::Vector3d cam = poses[j].to_camera_frame(cand.position);
      if (!(cam.z() >= config.depth_near && cam.z() <= config.depth_far)) continue;
      const Eigen::Vector2d pixel(intrinsics.fx * cam.x() / cam.z() + intrinsics.cx,
                                  intrinsics.fy * cam.y() / cam.z() + intrinsics.cy);
      if (pixel.x() < margin || pixel.x() > u_max || pixel.y() < margin ||
          pixel.y() > v_max) {
        continue;
      }
      cand.views.emplace_back(j + 1, pixel);
    }
    if (cand.views.size() >= 2) candidates.push_back(std::move(cand));
  }

  // The dense surface of each view is a smooth inverse-distance interpolant
  // of the depths of the points that view observes, so the scene behaves
  // like a surfel cloud: the map around a keypoint agrees with the keypoint's
  // depth, as it would for points reconstructed on visible surfaces. A weak
  // mid-depth anchor keeps pixels defined when a view has no points.
  auto render_background = [&](const std::vector<std::pair<Eigen::Vector2d, double>>&
                                   view_points) {
    DepthMap map(config.image_width, config.image_height);
    const double mid = 0.5 * (config.depth_near + config.depth_far);
    for (int y = 0; y < config.image_height; ++y) {
      for (int x = 0; x < config.image_width; ++x) {
        double weight_sum = 1e-9;
        double value_sum = 1e-9 * mid;
        for (const auto& [pixel, depth] : view_points) {
          const double dx = pixel.x() - x;
          const double dy = pixel.y() - y;
          const double w = 1.0 / std::pow(dx * dx + dy * dy + 4.0, 1.5);
          weight_sum += w;
          value_sum += w * depth;
        }
        map.set(x, y, value_sum / weight_sum);
      }
    }
    return map;
  };

  // Splat candidate depths on top of the interpolated surface: splats
  // override the background, and the nearest depth wins a pixel contested by
  // two splats. An observation whose bilinear sample then no longer matches
  // its depth is removed from the candidate's view list (the candidate itself
  // dies when fewer than two views remain) and the maps are re-rendered; the
  // observation set shrinks monotonically.
  while (true) {
    scene.gt_depth_maps.clear();
    std::vector<std::vector<std::pair<Eigen::Vector2d, double>>> view_points(
        static_cast<std::size_t>(config.n_images));
    for (const auto& cand : candidates) {
      for (const auto& [image_id, pixel] : cand.views) {
        const auto idx = static_cast<std::size_t>(image_id - 1);
        view_points[idx].emplace_back(pixel, poses[idx].to_camera_frame(cand.position).z());
      }
    }

    std::vector<std::vector<char>> splatted;
    for (int j = 0; j < config.n_images; ++j) {
      scene.gt_depth_maps.push_back(render_background(view_points[j]));
      splatted.emplace_back(
          static_cast<std::size_t>(config.image_width) * config.image_height, 0);
    }
    for (const auto& cand : candidates) {
      for (const auto& [image_id, pixel] : cand.views) {
        const auto idx = static_cast<std::size_t>(image_id - 1);
        DepthMap& map = scene.gt_depth_maps[idx];
        const Eigen::Vector3d cam = poses[idx].to_camera_frame(cand.position);
        const int x0 = static_cast<int>(std::floor(pixel.x()));
        const int y0 = static_cast<int>(std::floor(pixel.y()));
        for (int dy = 0; dy <= 1; ++dy) {
          for (int dx = 0; dx <= 1; ++dx) {
            const int x = x0 + dx;
            const int y = y0 + dy;
            char& mark = splatted[idx][map.index(x, y)];
            if (!mark || map.at(x, y) > cam.z()) {
              map.set(x, y, cam.z());
              mark = 1;
            }
          }
        }
      }
    }

    bool any_dropped = false;
    for (auto& cand : candidates) {
      for (auto it = cand.views.begin(); it != cand.views.end();) {
        const auto idx = static_cast<std::size_t>(it->first - 1);
        const Eigen::Vector3d cam = poses[idx].to_camera_frame(cand.position);
        const auto sampled = sample_depth_map(scene.gt_depth_maps[idx], it->second);
        if (!sampled.has_value() || std::abs(*sampled - cam.z()) > 1e-9 * cam.z()) {
          it = cand.views.erase(it);
          any_dropped = true;
        } else {
          ++it;
        }
      }
      if (cand.views.size() == 1) {
        cand.views.clear();
        any_dropped = true;
      }
    }
    if (!any_dropped) break;
  }

  // Commit surviving candidates as scene points with tracks and exact
  // observations.
  std::int64_t next_point_id = 1;
  for (const auto& cand : candidates) {
    if (cand.views.size() < 2) continue;
    ScenePoint point;
    point.point3d_id = next_point_id++;
    point.position = cand.position;
    point.color = cand.color;
    point.reproj_error = 0.0;
    for (const auto& [image_id, pixel] : cand.views) {
      PosedImage& image = scene.reconstruction.images.at(image_id);
      TrackEntry entry;
      entry.image_id = image_id;
      entry.point2d_idx = static_cast<std::uint32_t>(image.observations.size());
      point.track.push_back(entry);
      image.observations.push_back({pixel.x(), pixel.y(), point.point3d_id});
    }
    scene.reconstruction.points[point.point3d_id] = point;
  }

  return scene;
}

/// Deterministic synthetic network inputs: an inverse-depth shading channel
/// plus row/column coordinate ramps, each lightly dithered. The coordinate
/// channels give the model access to image position, the shading channel to
/// scene structure. Channels are centered on zero; all-positive inputs let a
/// fit drive entire ReLU channels dead in one direction.
inline std::vector<Tensor3> render_images(const SyntheticScene& scene, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor3> images;
  const auto& config = scene.config;
  const double inv_near = 1.0 / config.depth_near;
  const double inv_far = 1.0 / config.depth_far;
  for (const auto& map : scene.gt_depth_maps) {
    Tensor3 image(3, map.height(), map.width());
    for (int y = 0; y < map.height(); ++y) {
      for (int x = 0; x < map.width(); ++x) {
        const double shading =
            (1.0 / map.at(x, y) - inv_far) / (inv_near - inv_far);
        image.at(0, y, x) = shading - 0.5 + 0.02 * rng.normal();
        image.at(1, y, x) =
            static_cast<double>(y) / (map.height() - 1) - 0.5 + 0.01 * rng.normal();
        image.at(2, y, x) =
            static_cast<double>(x) / (map.width() - 1) - 0.5 + 0.01 * rng.normal();
      }
    }
    images.push_back(std::move(image));
  }
  return images;
}

/// Everything the corruption stage produces: a reconstruction whose points
/// carry the injected SfM noise (so the corruption round-trips through the
/// COLMAP file interface), the noisy extracted frames, the pseudo-network
/// maps, and the per-entry injected-outlier debug flags.
struct CorruptionResult {
  Reconstruction reconstruction;
  std::vector<SparseDepthFrame> frames;             // ordered by ascending image_id
  std::vector<DepthMap> network_maps;               // ordered by ascending image_id
  std::vector<std::vector<bool>> injected_outliers; // parallel to frames[i].entries
};

/// Applies the noise model. SfM noise moves each 3-D point along the ray
/// from its anchor camera (first track entry), which perturbs every view's
/// depth coherently and keeps the corruption representable in an exported
/// model. Outlier points are relocated by a uniform factor from the outlier
/// range. Pseudo-network maps are gt / gt_scale with per-pixel multiplicative
/// noise under the same depth-proportional law plus the smooth bias field.
inline CorruptionResult corrupt(const SyntheticScene& scene, const NoiseConfig& noise,
                                std::uint64_t seed) {
  detail::check_noise_config(noise);
  Rng rng(seed);
  const auto& config = scene.config;

  CorruptionResult result;
  result.reconstruction = scene.reconstruction;

  std::map<std::int64_t, bool> outlier_points;
  for (auto& [point_id, point] : result.reconstruction.points) {
    const auto& anchor_entry = point.track.front();
    const CameraPose anchor =
        CameraPose::of_image(result.reconstruction.images.at(anchor_entry.image_id));
    const double depth = point_depth(anchor, point.position);

    const bool is_outlier = rng.uniform() < noise.outlier_fraction;
    double corrupted = depth;
    if (is_outlier) {
      corrupted = depth * rng.uniform(noise.outlier_min, noise.outlier_max);
    } else if (noise.sfm_rel_sigma > 0.0) {
      const double rel_std = noise.sfm_rel_sigma * depth / config.depth_far;
      corrupted = depth * (1.0 + rel_std * rng.normal());
      corrupted = std::max(corrupted, 0.01 * depth);
    }
    point.position = anchor.translation +
                     (corrupted / depth) * (point.position - anchor.translation);
    point.reproj_error = std::abs(rng.normal(0.0, noise.reproj_noise_sigma));
    outlier_points[point_id] = is_outlier;
  }

  // One bias field per scene: the pseudo-network's systematic spatial error
  // is shared across the sequence, the way a miscalibrated predictor would
  // err consistently from frame to frame.
  detail::BiasField bias(noise.bias_amplitude, rng);
  for (const auto& [image_id, image] : scene.reconstruction.images) {
    const DepthMap& gt = scene.gt_map(image_id);
    DepthMap network(gt.width(), gt.height());
    for (int y = 0; y < gt.height(); ++y) {
      for (int x = 0; x < gt.width(); ++x) {
        const double depth = gt.at(x, y);
        double value = depth / scene.gt_scale;
        if (noise.nn_rel_sigma > 0.0) {
          const double rel_std = noise.nn_rel_sigma * depth / config.depth_far;
          value *= 1.0 + rel_std * rng.normal();
        }
        value *= bias.at(static_cast<double>(x) / (gt.width() - 1),
                         static_cast<double>(y) / (gt.height() - 1));
        network.set(x, y, std::max(value, 1e-6));
      }
    }
    result.network_maps.push_back(std::move(network));
  }

  for (const auto& [image_id, image] : result.reconstruction.images) {
    SparseDepthFrame frame = extract_sparse_depths(
        result.reconstruction, image_id,
        result.network_maps[static_cast<std::size_t>(image_id - 1)]);
    std::vector<bool> flags;
    flags.reserve(frame.entries.size());
    for (const auto& entry : frame.entries) flags.push_back(outlier_points[entry.point3d_id]);
    result.frames.push_back(std::move(frame));
    result.injected_outliers.push_back(std::move(flags));
  }
  return result;
}

/// Direct generator of aligned depth pairs under the same noise model, for
/// alignment studies that do not need a full scene: depths inverse-uniform in
/// [depth_near, depth_far], nn = true_scale * depth with multiplicative
/// depth-proportional noise, sfm likewise noisy or replaced by an outlier
/// draw. Returns the pairs and the injected-outlier flags.
inline std::pair<std::vector<DepthPair>, std::vector<bool>> make_depth_pairs(
    int count, double true_scale, double depth_near, double depth_far,
    const NoiseConfig& noise, std::uint64_t seed) {
  if (count < 1) fail(ErrorCode::InvalidConfig, "make_depth_pairs: count must be >= 1");
  if (!(depth_near > 0.0) || !(depth_far > depth_near)) {
    fail(ErrorCode::InvalidConfig, "make_depth_pairs: bad depth range");
  }
  detail::check_noise_config(noise);

  Rng rng(seed);
  std::vector<DepthPair> pairs;
  std::vector<bool> flags;
  pairs.reserve(static_cast<std::size_t>(count));
  flags.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double depth = 1.0 / rng.uniform(1.0 / depth_far, 1.0 / depth_near);
    const double rel_std_sfm = noise.sfm_rel_sigma * depth / depth_far;
    const double rel_std_nn = noise.nn_rel_sigma * depth / depth_far;

    DepthPair pair;
    pair.index = i;
    pair.nn = true_scale * depth * (1.0 + rel_std_nn * rng.normal());
    pair.nn = std::max(pair.nn, 1e-9);
    const bool is_outlier = rng.uniform() < noise.outlier_fraction;
    if (is_outlier) {
      pair.sfm = depth * rng.uniform(noise.outlier_min, noise.outlier_max);
    } else {
      pair.sfm = std::max(depth * (1.0 + rel_std_sfm * rng.normal()), 0.01 * depth);
    }
    pair.reproj_error = std::abs(rng.normal(0.0, noise.reproj_noise_sigma));
    pairs.push_back(pair);
    flags.push_back(is_outlier);
  }
  return {std::move(pairs), std::move(flags)};
}

/// Writes the scene through the public file interfaces: a COLMAP text model,
/// gt and network PFM depth maps, and color PFM input images.
inline void export_scene(const SyntheticScene& scene, const std::vector<Tensor3>& images,
                         const CorruptionResult& corruption,
                         const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "model", ec);
  fs::create_directories(dir / "gt", ec);
  fs::create_directories(dir / "nn", ec);
  fs::create_directories(dir / "images", ec);

  write_reconstruction_text(corruption.reconstruction, dir / "model");
  for (const auto& [image_id, image] : scene.reconstruction.images) {
    const auto idx = static_cast<std::size_t>(image_id - 1);
    write_pfm_depth(scene.gt_depth_maps[idx], dir / "gt" / image.name);
    write_pfm_depth(corruption.network_maps[idx], dir / "nn" / image.name);
    if (idx < images.size()) write_pfm_image(images[idx], dir / "images" / image.name);
  }
}

}  // namespace sfmttr
