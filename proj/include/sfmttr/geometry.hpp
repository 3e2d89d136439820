#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "sfmttr/error.hpp"
#include "sfmttr/reconstruction.hpp"

namespace sfmttr {

/// Camera-to-world pose: rotation R and camera center t in world coordinates.
/// A world point X maps into the camera frame as R^T (X - t).
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  /// Converts from the stored world-to-camera form (x_cam = R_wc x + t_wc).
  static CameraPose from_world_to_camera(const Eigen::Quaterniond& rotation_wc,
                                         const Eigen::Vector3d& translation_wc) {
    const Eigen::Matrix3d r_wc = rotation_wc.toRotationMatrix();
    CameraPose pose;
    pose.rotation = r_wc.transpose();
    pose.translation = -(r_wc.transpose() * translation_wc);
    return pose;
  }

  static CameraPose of_image(const PosedImage& image) {
    return from_world_to_camera(image.rotation, image.translation);
  }

  Eigen::Vector3d to_camera_frame(const Eigen::Vector3d& world_point) const {
    return rotation.transpose() * (world_point - translation);
  }

  Eigen::Vector3d to_world_frame(const Eigen::Vector3d& camera_point) const {
    return rotation * camera_point + translation;
  }
};

/// Dense per-pixel depth grid with a validity mask. Row-major, row 0 at the
/// top of the image; all valid values are expected to be positive and finite.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0, bool valid = false)
      : width_(width),
        height_(height),
        values_(static_cast<std::size_t>(width) * height, fill),
        valid_(static_cast<std::size_t>(width) * height, valid ? 1 : 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  double at(int x, int y) const { return values_[index(x, y)]; }
  bool valid(int x, int y) const { return valid_[index(x, y)] != 0; }

  void set(int x, int y, double value) {
    values_[index(x, y)] = value;
    valid_[index(x, y)] = 1;
  }
  void set_invalid(int x, int y) { valid_[index(x, y)] = 0; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<std::uint8_t>& validity() const { return valid_; }
  std::vector<std::uint8_t>& validity() { return valid_; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_;
};

/// One multi-view supervision sample: the projected pixel of a reconstructed
/// point, its multi-view depth, the network depth sampled at that pixel, and
/// the point's reported reprojection error.
struct SparseDepthEntry {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double sfm_depth = 0.0;
  double nn_depth = 0.0;
  double reproj_error = 0.0;
  std::int64_t point3d_id = kNoPoint3d;
};

struct SparseDepthFrame {
  int image_id = 0;
  std::vector<SparseDepthEntry> entries;
};

/// Counters for entries dropped while extracting a frame.
struct ExtractionStats {
  int candidates = 0;
  int behind_camera = 0;
  int out_of_bounds = 0;
  int invalid_sample = 0;
  int emitted = 0;
};

/// Depth of a world point along the camera's optical axis. Total function;
/// non-positive results mean the point is behind the camera and are the
/// caller's job to filter.
inline double point_depth(const CameraPose& pose, const Eigen::Vector3d& point) {
  return pose.to_camera_frame(point).z();
}

/// Pinhole projection of a world point to subpixel image coordinates.
inline Eigen::Vector2d project(const CameraIntrinsics& intrinsics, const CameraPose& pose,
                               const Eigen::Vector3d& point) {
  const Eigen::Vector3d cam = pose.to_camera_frame(point);
  if (!(cam.z() > 0.0)) {
    fail(ErrorCode::BehindCamera,
         "point projects behind the camera (z = " + std::to_string(cam.z()) + ")");
  }
  return {intrinsics.fx * cam.x() / cam.z() + intrinsics.cx,
          intrinsics.fy * cam.y() / cam.z() + intrinsics.cy};
}

/// Inverse of project for a given depth: reconstructs the world point whose
/// projection is (u, v) at optical-axis depth d.
inline Eigen::Vector3d backproject(const CameraIntrinsics& intrinsics,
                                   const CameraPose& pose, const Eigen::Vector2d& pixel,
                                   double depth) {
  const Eigen::Vector3d cam(depth * (pixel.x() - intrinsics.cx) / intrinsics.fx,
                            depth * (pixel.y() - intrinsics.cy) / intrinsics.fy, depth);
  return pose.to_world_frame(cam);
}

/// Bilinear sample of the depth map at a subpixel location. Neighbors with
/// zero interpolation weight do not participate, so a query exactly on a grid
/// node returns that node's value. Returns nullopt when any contributing
/// neighbor is masked invalid.
inline std::optional<double> sample_depth_map(const DepthMap& map,
                                              const Eigen::Vector2d& pixel) {
  const double x = pixel.x();
  const double y = pixel.y();
  if (!(x >= 0.0) || !(y >= 0.0) || !(x <= map.width() - 1.0) ||
      !(y <= map.height() - 1.0)) {
    fail(ErrorCode::OutOfBounds, "sample at (" + std::to_string(x) + ", " +
                                     std::to_string(y) + ") outside [0, " +
                                     std::to_string(map.width() - 1) + "] x [0, " +
                                     std::to_string(map.height() - 1) + "]");
  }
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, map.width() - 1);
  const int y1 = std::min(y0 + 1, map.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;

  const double weights[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy,
                             fx * fy};
  const int xs[4] = {x0, x1, x0, x1};
  const int ys[4] = {y0, y0, y1, y1};

  double value = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (weights[i] == 0.0) continue;
    if (!map.valid(xs[i], ys[i])) return std::nullopt;
    value += weights[i] * map.at(xs[i], ys[i]);
  }
  return value;
}

/// Bilinear resize to the target resolution. Output pixels that sample any
/// invalid input pixel become invalid.
inline DepthMap resize_depth_map(const DepthMap& map, int width, int height) {
  DepthMap out(width, height);
  const double sx = width > 1 ? double(map.width() - 1) / (width - 1) : 0.0;
  const double sy = height > 1 ? double(map.height() - 1) / (height - 1) : 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto v = sample_depth_map(map, {x * sx, y * sy});
      if (v.has_value()) {
        out.set(x, y, *v);
      } else {
        out.set_invalid(x, y);
      }
    }
  }
  return out;
}

struct ExtractionOptions {
  /// Resize the depth map to the camera resolution when they differ.
  bool allow_rescale = true;
};

/// Collects the sparse multi-view depth supervision for one image: for every
/// reconstructed point the image observes, the point's optical-axis depth,
/// its projected pixel, and the network depth sampled there. Entries behind
/// the camera, projecting out of bounds, or landing on invalid/non-positive
/// depth samples are dropped and counted in the stats.
inline SparseDepthFrame extract_sparse_depths(const Reconstruction& recon, int image_id,
                                              const DepthMap& depth_map,
                                              const ExtractionOptions& options = {},
                                              ExtractionStats* stats_out = nullptr) {
  const auto image_it = recon.images.find(image_id);
  if (image_it == recon.images.end()) {
    fail(ErrorCode::UnregisteredImage,
         "image_id " + std::to_string(image_id) + " is not registered");
  }
  const PosedImage& image = image_it->second;
  const CameraIntrinsics& intrinsics = recon.cameras.at(image.camera_id);
  const CameraPose pose = CameraPose::of_image(image);

  const int cam_w = static_cast<int>(intrinsics.width);
  const int cam_h = static_cast<int>(intrinsics.height);
  const DepthMap* map = &depth_map;
  DepthMap resized;
  if (depth_map.width() != cam_w || depth_map.height() != cam_h) {
    if (!options.allow_rescale) {
      fail(ErrorCode::ResolutionMismatch,
           "depth map is " + std::to_string(depth_map.width()) + "x" +
               std::to_string(depth_map.height()) + ", camera expects " +
               std::to_string(cam_w) + "x" + std::to_string(cam_h));
    }
    resized = resize_depth_map(depth_map, cam_w, cam_h);
    map = &resized;
  }

  ExtractionStats stats;
  SparseDepthFrame frame;
  frame.image_id = image_id;

  for (const auto& obs : image.observations) {
    if (!obs.has_point3d()) continue;
    ++stats.candidates;
    const ScenePoint& point = recon.points.at(obs.point3d_id);

    const Eigen::Vector3d cam = pose.to_camera_frame(point.position);
    if (!(cam.z() > 0.0)) {
      ++stats.behind_camera;
      continue;
    }
    const Eigen::Vector2d pixel(intrinsics.fx * cam.x() / cam.z() + intrinsics.cx,
                                intrinsics.fy * cam.y() / cam.z() + intrinsics.cy);
    if (pixel.x() < 0.0 || pixel.y() < 0.0 || pixel.x() > cam_w - 1.0 ||
        pixel.y() > cam_h - 1.0) {
      ++stats.out_of_bounds;
      continue;
    }
    const auto sampled = sample_depth_map(*map, pixel);
    if (!sampled.has_value() || !(*sampled > 0.0)) {
      ++stats.invalid_sample;
      continue;
    }

    SparseDepthEntry entry;
    entry.pixel = pixel;
    entry.sfm_depth = cam.z();
    entry.nn_depth = *sampled;
    entry.reproj_error = point.reproj_error;
    entry.point3d_id = obs.point3d_id;
    frame.entries.push_back(entry);
    ++stats.emitted;
  }

  if (stats_out != nullptr) *stats_out = stats;
  return frame;
}

}  // namespace sfmttr
