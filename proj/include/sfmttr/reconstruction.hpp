#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sfmttr {

/// Sentinel for a 2-D feature without a triangulated point. Any negative id
/// read from a model file is normalized to this value.
inline constexpr std::int64_t kNoPoint3d = -1;

enum class CameraModelId {
  kSimplePinhole,  // params (f, cx, cy)
  kPinhole,        // params (fx, fy, cx, cy)
};

inline const char* camera_model_name(CameraModelId model) {
  return model == CameraModelId::kSimplePinhole ? "SIMPLE_PINHOLE" : "PINHOLE";
}

struct CameraIntrinsics {
  int camera_id = 0;
  CameraModelId model = CameraModelId::kPinhole;
  std::uint64_t width = 0;
  std::uint64_t height = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// A 2-D keypoint observation in an image. point3d_id is kNoPoint3d when the
/// feature has no triangulated point.
struct ImageObservation {
  double x = 0.0;
  double y = 0.0;
  std::int64_t point3d_id = kNoPoint3d;

  bool has_point3d() const { return point3d_id >= 0; }
};

/// A registered image. Rotation and translation are stored in the COLMAP
/// convention: world-to-camera, x_cam = R * x_world + t.
struct PosedImage {
  int image_id = 0;
  int camera_id = 0;
  std::string name;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  std::vector<ImageObservation> observations;
};

struct TrackEntry {
  int image_id = 0;
  std::uint32_t point2d_idx = 0;
};

struct ScenePoint {
  std::int64_t point3d_id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::array<std::uint8_t, 3> color = {0, 0, 0};
  /// Reprojection error as reported by the reconstruction tool, in pixels.
  /// COLMAP does not document whether this is the mean or the RMS over the
  /// track; it is consumed verbatim.
  double reproj_error = 0.0;
  std::vector<TrackEntry> track;
};

/// Sparse multi-view reconstruction: cameras, posed images with 2-D
/// observations, and 3-D points with tracks. Immutable after load; safe to
/// share read-only across threads. Ordered maps keep iteration deterministic.
struct Reconstruction {
  std::map<int, CameraIntrinsics> cameras;
  std::map<int, PosedImage> images;
  std::map<std::int64_t, ScenePoint> points;
};

}  // namespace sfmttr
