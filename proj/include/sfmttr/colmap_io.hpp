#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sfmttr/error.hpp"
#include "sfmttr/io_util.hpp"
#include "sfmttr/reconstruction.hpp"

namespace sfmttr {

enum class ModelFormat { kBinary, kText };

namespace detail {

// COLMAP model files are little-endian by definition; no autodetection.
template <typename T>
T from_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* bytes = reinterpret_cast<unsigned char*>(&value);
    std::reverse(bytes, bytes + sizeof(T));
  }
  return value;
}

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string file_label)
      : data_(data), label_(std::move(file_label)) {}

  template <typename T>
  T read() {
    static_assert(std::is_trivially_copyable_v<T>);
    if (pos_ + sizeof(T) > data_.size()) {
      fail(ErrorCode::TruncatedFile,
           label_ + ": need " + std::to_string(sizeof(T)) + " bytes at offset " +
               std::to_string(pos_) + ", file has " + std::to_string(data_.size()));
    }
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return from_little_endian(value);
  }

  std::string read_cstring() {
    std::string out;
    while (true) {
      if (pos_ >= data_.size()) {
        fail(ErrorCode::TruncatedFile, label_ + ": unterminated string at offset " +
                                           std::to_string(pos_));
      }
      const char c = data_[pos_++];
      if (c == '\0') break;
      out.push_back(c);
    }
    return out;
  }

  const std::string& label() const { return label_; }

 private:
  std::string_view data_;
  std::string label_;
  std::size_t pos_ = 0;
};

/// Iterates non-comment, non-blank lines and tracks 1-based line numbers.
class TextReader {
 public:
  TextReader(std::string_view data, std::string file_label)
      : data_(data), label_(std::move(file_label)) {}

  /// Returns false at end of input. Skips '#' comments and blank-only lines
  /// unless keep_blank is set (the images text format has meaningful empty
  /// observation lines).
  bool next_line(std::string_view& line, bool keep_blank = false) {
    while (pos_ < data_.size()) {
      std::size_t end = data_.find('\n', pos_);
      if (end == std::string_view::npos) end = data_.size();
      line = data_.substr(pos_, end - pos_);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      pos_ = end + 1;
      ++line_number_;
      const bool blank = line.find_first_not_of(" \t") == std::string_view::npos;
      if (!blank && line[line.find_first_not_of(" \t")] == '#') continue;
      if (blank && !keep_blank) continue;
      return true;
    }
    return false;
  }

  int line_number() const { return line_number_; }
  std::string location() const {
    return label_ + " line " + std::to_string(line_number_);
  }

 private:
  std::string_view data_;
  std::string label_;
  std::size_t pos_ = 0;
  int line_number_ = 0;
};

inline std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

inline double parse_double(const std::string& token, const std::string& where) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &consumed);
  } catch (const std::exception&) {
    fail(ErrorCode::MalformedLine, where + ": not a number: '" + token + "'");
  }
  if (consumed != token.size()) {
    fail(ErrorCode::MalformedLine, where + ": not a number: '" + token + "'");
  }
  return value;
}

inline std::int64_t parse_int(const std::string& token, const std::string& where) {
  std::size_t consumed = 0;
  std::int64_t value = 0;
  try {
    value = std::stoll(token, &consumed);
  } catch (const std::exception&) {
    fail(ErrorCode::MalformedLine, where + ": not an integer: '" + token + "'");
  }
  if (consumed != token.size()) {
    fail(ErrorCode::MalformedLine, where + ": not an integer: '" + token + "'");
  }
  return value;
}

inline const char* colmap_model_id_name(int model_id) {
  switch (model_id) {
    case 0: return "SIMPLE_PINHOLE";
    case 1: return "PINHOLE";
    case 2: return "SIMPLE_RADIAL";
    case 3: return "RADIAL";
    case 4: return "OPENCV";
    case 5: return "OPENCV_FISHEYE";
    case 6: return "FULL_OPENCV";
    case 7: return "FOV";
    case 8: return "SIMPLE_RADIAL_FISHEYE";
    case 9: return "RADIAL_FISHEYE";
    case 10: return "THIN_PRISM_FISHEYE";
    default: return "UNKNOWN";
  }
}

inline void check_intrinsics(const CameraIntrinsics& cam, const std::string& where) {
  if (cam.width == 0 || cam.height == 0) {
    fail(ErrorCode::MalformedLine, where + ": camera " + std::to_string(cam.camera_id) +
                                       " has zero width or height");
  }
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) {
    fail(ErrorCode::MalformedLine, where + ": camera " + std::to_string(cam.camera_id) +
                                       " has non-positive focal length");
  }
  if (!(cam.cx >= 0.0) || cam.cx >= static_cast<double>(cam.width) ||
      !(cam.cy >= 0.0) || cam.cy >= static_cast<double>(cam.height)) {
    fail(ErrorCode::MalformedLine, where + ": camera " + std::to_string(cam.camera_id) +
                                       " principal point outside image");
  }
}

/// Renormalizes q in place; rejects quaternions further than 1e-3 from unit.
inline void normalize_quaternion(Eigen::Quaterniond& q, const std::string& where) {
  const double norm = q.norm();
  if (std::abs(norm - 1.0) > 1e-3) {
    fail(ErrorCode::NonUnitQuaternion,
         where + ": quaternion norm " + std::to_string(norm) + " deviates from 1");
  }
  q.normalize();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

inline std::map<int, CameraIntrinsics> parse_cameras(std::string_view bytes,
                                                     ModelFormat format) {
  std::map<int, CameraIntrinsics> cameras;

  auto insert = [&cameras](const CameraIntrinsics& cam, const std::string& where) {
    detail::check_intrinsics(cam, where);
    if (!cameras.emplace(cam.camera_id, cam).second) {
      fail(ErrorCode::MalformedLine,
           where + ": duplicate camera_id " + std::to_string(cam.camera_id));
    }
  };

  if (format == ModelFormat::kBinary) {
    detail::ByteReader reader(bytes, "cameras.bin");
    const auto count = reader.read<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::string where = "cameras.bin record " + std::to_string(i);
      CameraIntrinsics cam;
      cam.camera_id = reader.read<std::int32_t>();
      const auto model_id = reader.read<std::int32_t>();
      cam.width = reader.read<std::uint64_t>();
      cam.height = reader.read<std::uint64_t>();
      if (model_id == 0) {
        cam.model = CameraModelId::kSimplePinhole;
        const double f = reader.read<double>();
        cam.cx = reader.read<double>();
        cam.cy = reader.read<double>();
        cam.fx = cam.fy = f;
      } else if (model_id == 1) {
        cam.model = CameraModelId::kPinhole;
        cam.fx = reader.read<double>();
        cam.fy = reader.read<double>();
        cam.cx = reader.read<double>();
        cam.cy = reader.read<double>();
      } else {
        fail(ErrorCode::UnsupportedCameraModel,
             where + ": model " + detail::colmap_model_id_name(model_id) +
                 " (model_id " + std::to_string(model_id) +
                 "); only SIMPLE_PINHOLE and PINHOLE are supported");
      }
      insert(cam, where);
    }
    return cameras;
  }

  detail::TextReader reader(bytes, "cameras.txt");
  std::string_view line;
  while (reader.next_line(line)) {
    const std::string where = reader.location();
    const auto tokens = detail::split_tokens(line);
    if (tokens.size() < 4) {
      fail(ErrorCode::MalformedLine, where + ": expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]");
    }
    CameraIntrinsics cam;
    cam.camera_id = static_cast<int>(detail::parse_int(tokens[0], where));
    const std::string& model_name = tokens[1];
    cam.width = static_cast<std::uint64_t>(detail::parse_int(tokens[2], where));
    cam.height = static_cast<std::uint64_t>(detail::parse_int(tokens[3], where));
    if (model_name == "SIMPLE_PINHOLE") {
      if (tokens.size() != 7) {
        fail(ErrorCode::MalformedLine, where + ": SIMPLE_PINHOLE needs 3 params");
      }
      cam.model = CameraModelId::kSimplePinhole;
      cam.fx = cam.fy = detail::parse_double(tokens[4], where);
      cam.cx = detail::parse_double(tokens[5], where);
      cam.cy = detail::parse_double(tokens[6], where);
    } else if (model_name == "PINHOLE") {
      if (tokens.size() != 8) {
        fail(ErrorCode::MalformedLine, where + ": PINHOLE needs 4 params");
      }
      cam.model = CameraModelId::kPinhole;
      cam.fx = detail::parse_double(tokens[4], where);
      cam.fy = detail::parse_double(tokens[5], where);
      cam.cx = detail::parse_double(tokens[6], where);
      cam.cy = detail::parse_double(tokens[7], where);
    } else {
      fail(ErrorCode::UnsupportedCameraModel,
           where + ": model " + model_name +
               "; only SIMPLE_PINHOLE and PINHOLE are supported");
    }
    insert(cam, where);
  }
  return cameras;
}

inline std::map<int, PosedImage> parse_images(std::string_view bytes,
                                              ModelFormat format) {
  std::map<int, PosedImage> images;

  auto insert = [&images](PosedImage&& image, const std::string& where) {
    const int id = image.image_id;
    if (!images.emplace(id, std::move(image)).second) {
      fail(ErrorCode::MalformedLine, where + ": duplicate image_id " + std::to_string(id));
    }
  };

  if (format == ModelFormat::kBinary) {
    detail::ByteReader reader(bytes, "images.bin");
    const auto count = reader.read<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::string where = "images.bin record " + std::to_string(i);
      PosedImage image;
      image.image_id = reader.read<std::int32_t>();
      const double qw = reader.read<double>();
      const double qx = reader.read<double>();
      const double qy = reader.read<double>();
      const double qz = reader.read<double>();
      image.rotation = Eigen::Quaterniond(qw, qx, qy, qz);
      detail::normalize_quaternion(image.rotation, where);
      image.translation.x() = reader.read<double>();
      image.translation.y() = reader.read<double>();
      image.translation.z() = reader.read<double>();
      image.camera_id = reader.read<std::int32_t>();
      image.name = reader.read_cstring();
      const auto num_points2d = reader.read<std::uint64_t>();
      image.observations.reserve(num_points2d);
      for (std::uint64_t k = 0; k < num_points2d; ++k) {
        ImageObservation obs;
        obs.x = reader.read<double>();
        obs.y = reader.read<double>();
        const auto id = reader.read<std::int64_t>();
        obs.point3d_id = id < 0 ? kNoPoint3d : id;
        image.observations.push_back(obs);
      }
      insert(std::move(image), where);
    }
    return images;
  }

  detail::TextReader reader(bytes, "images.txt");
  std::string_view line;
  while (reader.next_line(line)) {
    const std::string where = reader.location();
    const auto tokens = detail::split_tokens(line);
    if (tokens.size() < 10) {
      fail(ErrorCode::MalformedLine,
           where + ": expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME");
    }
    PosedImage image;
    image.image_id = static_cast<int>(detail::parse_int(tokens[0], where));
    image.rotation = Eigen::Quaterniond(
        detail::parse_double(tokens[1], where), detail::parse_double(tokens[2], where),
        detail::parse_double(tokens[3], where), detail::parse_double(tokens[4], where));
    detail::normalize_quaternion(image.rotation, where);
    image.translation = Eigen::Vector3d(detail::parse_double(tokens[5], where),
                                        detail::parse_double(tokens[6], where),
                                        detail::parse_double(tokens[7], where));
    image.camera_id = static_cast<int>(detail::parse_int(tokens[8], where));
    image.name = tokens[9];
    for (std::size_t t = 10; t < tokens.size(); ++t) image.name += " " + tokens[t];

    // Second line: POINTS2D as (X, Y, POINT3D_ID) triplets; may be blank.
    std::string_view obs_line;
    if (!reader.next_line(obs_line, /*keep_blank=*/true)) {
      fail(ErrorCode::MalformedLine, where + ": missing POINTS2D line for image " +
                                         std::to_string(image.image_id));
    }
    const std::string obs_where = reader.location();
    const auto obs_tokens = detail::split_tokens(obs_line);
    if (obs_tokens.size() % 3 != 0) {
      fail(ErrorCode::MalformedLine,
           obs_where + ": POINTS2D token count not a multiple of 3");
    }
    image.observations.reserve(obs_tokens.size() / 3);
    for (std::size_t t = 0; t < obs_tokens.size(); t += 3) {
      ImageObservation obs;
      obs.x = detail::parse_double(obs_tokens[t], obs_where);
      obs.y = detail::parse_double(obs_tokens[t + 1], obs_where);
      const auto id = detail::parse_int(obs_tokens[t + 2], obs_where);
      obs.point3d_id = id < 0 ? kNoPoint3d : id;
      image.observations.push_back(obs);
    }
    insert(std::move(image), where);
  }
  return images;
}

inline std::map<std::int64_t, ScenePoint> parse_points3d(std::string_view bytes,
                                                         ModelFormat format) {
  std::map<std::int64_t, ScenePoint> points;

  auto insert = [&points](ScenePoint&& point, const std::string& where) {
    if (point.reproj_error < 0.0) {
      fail(ErrorCode::NegativeError,
           where + ": point " + std::to_string(point.point3d_id) +
               " has negative reprojection error " + std::to_string(point.reproj_error));
    }
    const auto id = point.point3d_id;
    if (!points.emplace(id, std::move(point)).second) {
      fail(ErrorCode::MalformedLine, where + ": duplicate point3d_id " + std::to_string(id));
    }
  };

  if (format == ModelFormat::kBinary) {
    detail::ByteReader reader(bytes, "points3D.bin");
    const auto count = reader.read<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::string where = "points3D.bin record " + std::to_string(i);
      ScenePoint point;
      point.point3d_id = reader.read<std::int64_t>();
      point.position.x() = reader.read<double>();
      point.position.y() = reader.read<double>();
      point.position.z() = reader.read<double>();
      point.color[0] = reader.read<std::uint8_t>();
      point.color[1] = reader.read<std::uint8_t>();
      point.color[2] = reader.read<std::uint8_t>();
      point.reproj_error = reader.read<double>();
      const auto track_len = reader.read<std::uint64_t>();
      point.track.reserve(track_len);
      for (std::uint64_t k = 0; k < track_len; ++k) {
        TrackEntry entry;
        entry.image_id = reader.read<std::int32_t>();
        entry.point2d_idx = static_cast<std::uint32_t>(reader.read<std::int32_t>());
        point.track.push_back(entry);
      }
      insert(std::move(point), where);
    }
    return points;
  }

  detail::TextReader reader(bytes, "points3D.txt");
  std::string_view line;
  while (reader.next_line(line)) {
    const std::string where = reader.location();
    const auto tokens = detail::split_tokens(line);
    if (tokens.size() < 8 || (tokens.size() - 8) % 2 != 0) {
      fail(ErrorCode::MalformedLine,
           where + ": expected POINT3D_ID X Y Z R G B ERROR TRACK[] pairs");
    }
    ScenePoint point;
    point.point3d_id = detail::parse_int(tokens[0], where);
    point.position = Eigen::Vector3d(detail::parse_double(tokens[1], where),
                                     detail::parse_double(tokens[2], where),
                                     detail::parse_double(tokens[3], where));
    for (int c = 0; c < 3; ++c) {
      const auto v = detail::parse_int(tokens[4 + c], where);
      if (v < 0 || v > 255) {
        fail(ErrorCode::MalformedLine, where + ": color component out of [0,255]");
      }
      point.color[c] = static_cast<std::uint8_t>(v);
    }
    point.reproj_error = detail::parse_double(tokens[7], where);
    point.track.reserve((tokens.size() - 8) / 2);
    for (std::size_t t = 8; t < tokens.size(); t += 2) {
      TrackEntry entry;
      entry.image_id = static_cast<int>(detail::parse_int(tokens[t], where));
      entry.point2d_idx =
          static_cast<std::uint32_t>(detail::parse_int(tokens[t + 1], where));
      point.track.push_back(entry);
    }
    insert(std::move(point), where);
  }
  return points;
}

// ---------------------------------------------------------------------------
// Integrity
// ---------------------------------------------------------------------------

/// Cross-checks the three maps: camera references, observation -> point
/// references, and bidirectional track <-> observation consistency.
inline void validate_integrity(const Reconstruction& recon) {
  std::vector<std::string> violations;
  auto report = [&violations](std::string msg) {
    if (violations.size() < 8) violations.push_back(std::move(msg));
  };

  for (const auto& [image_id, image] : recon.images) {
    if (!recon.cameras.contains(image.camera_id)) {
      report("image " + std::to_string(image_id) + " references missing camera_id " +
             std::to_string(image.camera_id));
    }
    for (std::size_t i = 0; i < image.observations.size(); ++i) {
      const auto& obs = image.observations[i];
      if (!obs.has_point3d()) continue;
      const auto it = recon.points.find(obs.point3d_id);
      if (it == recon.points.end()) {
        report("image " + std::to_string(image_id) + " observation " + std::to_string(i) +
               " references missing point3d_id " + std::to_string(obs.point3d_id));
        continue;
      }
      const auto& track = it->second.track;
      const bool found = std::any_of(track.begin(), track.end(), [&](const TrackEntry& e) {
        return e.image_id == image_id && e.point2d_idx == i;
      });
      if (!found) {
        report("point " + std::to_string(obs.point3d_id) + " track is missing entry (" +
               std::to_string(image_id) + ", " + std::to_string(i) + ")");
      }
    }
  }

  for (const auto& [point_id, point] : recon.points) {
    if (point.track.size() < 2) {
      report("point " + std::to_string(point_id) + " has track length " +
             std::to_string(point.track.size()) + " < 2");
    }
    for (const auto& entry : point.track) {
      const auto image_it = recon.images.find(entry.image_id);
      if (image_it == recon.images.end()) {
        report("point " + std::to_string(point_id) + " track references missing image " +
               std::to_string(entry.image_id));
        continue;
      }
      const auto& observations = image_it->second.observations;
      if (entry.point2d_idx >= observations.size()) {
        report("point " + std::to_string(point_id) + " track references observation " +
               std::to_string(entry.point2d_idx) + " out of range in image " +
               std::to_string(entry.image_id));
        continue;
      }
      if (observations[entry.point2d_idx].point3d_id != point_id) {
        report("point " + std::to_string(point_id) + " track entry (" +
               std::to_string(entry.image_id) + ", " + std::to_string(entry.point2d_idx) +
               ") resolves to point3d_id " +
               std::to_string(observations[entry.point2d_idx].point3d_id));
      }
    }
  }

  if (!violations.empty()) {
    std::string message = std::to_string(violations.size()) + " violation(s): ";
    for (std::size_t i = 0; i < violations.size(); ++i) {
      if (i > 0) message += "; ";
      message += violations[i];
    }
    fail(ErrorCode::IntegrityViolation, message);
  }
}

// ---------------------------------------------------------------------------
// Directory-level load / write
// ---------------------------------------------------------------------------

namespace detail {

/// Picks <stem>.bin over <stem>.txt when both exist.
inline std::pair<std::filesystem::path, ModelFormat> pick_model_file(
    const std::filesystem::path& dir, const std::string& stem) {
  const auto bin = dir / (stem + ".bin");
  if (std::filesystem::exists(bin)) return {bin, ModelFormat::kBinary};
  const auto txt = dir / (stem + ".txt");
  if (std::filesystem::exists(txt)) return {txt, ModelFormat::kText};
  fail(ErrorCode::MissingFile, "neither " + bin.string() + " nor " + txt.string() + " exists");
}

}  // namespace detail

inline Reconstruction load_reconstruction(const std::filesystem::path& dir) {
  Reconstruction recon;
  {
    const auto [path, format] = detail::pick_model_file(dir, "cameras");
    recon.cameras = parse_cameras(detail::read_file(path), format);
  }
  {
    const auto [path, format] = detail::pick_model_file(dir, "images");
    recon.images = parse_images(detail::read_file(path), format);
  }
  {
    const auto [path, format] = detail::pick_model_file(dir, "points3D");
    recon.points = parse_points3d(detail::read_file(path), format);
  }
  validate_integrity(recon);
  return recon;
}

inline void write_reconstruction_text(const Reconstruction& recon,
                                      const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create directory " + dir.string());

  auto open = [](const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    return out;
  };
  const auto& fmt = detail::format_double;

  {
    auto out = open(dir / "cameras.txt");
    out << "# Camera list with one line of data per camera:\n"
        << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n"
        << "# Number of cameras: " << recon.cameras.size() << "\n";
    for (const auto& [id, cam] : recon.cameras) {
      // A camera claiming SIMPLE_PINHOLE with fx != fy cannot be represented
      // by a single focal length; demote to PINHOLE.
      if (cam.model == CameraModelId::kSimplePinhole && cam.fx == cam.fy) {
        out << id << " SIMPLE_PINHOLE " << cam.width << " " << cam.height << " "
            << fmt(cam.fx) << " " << fmt(cam.cx) << " " << fmt(cam.cy) << "\n";
      } else {
        out << id << " PINHOLE " << cam.width << " " << cam.height << " " << fmt(cam.fx)
            << " " << fmt(cam.fy) << " " << fmt(cam.cx) << " " << fmt(cam.cy) << "\n";
      }
    }
    if (!out.good()) fail(ErrorCode::IoFailure, "write failed: cameras.txt");
  }

  {
    auto out = open(dir / "images.txt");
    out << "# Image list with two lines of data per image:\n"
        << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
        << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n"
        << "# Number of images: " << recon.images.size() << "\n";
    for (const auto& [id, image] : recon.images) {
      const auto& q = image.rotation;
      const auto& t = image.translation;
      out << id << " " << fmt(q.w()) << " " << fmt(q.x()) << " " << fmt(q.y()) << " "
          << fmt(q.z()) << " " << fmt(t.x()) << " " << fmt(t.y()) << " " << fmt(t.z())
          << " " << image.camera_id << " " << image.name << "\n";
      for (std::size_t i = 0; i < image.observations.size(); ++i) {
        const auto& obs = image.observations[i];
        if (i > 0) out << " ";
        out << fmt(obs.x) << " " << fmt(obs.y) << " " << obs.point3d_id;
      }
      out << "\n";
    }
    if (!out.good()) fail(ErrorCode::IoFailure, "write failed: images.txt");
  }

  {
    auto out = open(dir / "points3D.txt");
    out << "# 3D point list with one line of data per point:\n"
        << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n"
        << "# Number of points: " << recon.points.size() << "\n";
    for (const auto& [id, point] : recon.points) {
      out << id << " " << fmt(point.position.x()) << " " << fmt(point.position.y()) << " "
          << fmt(point.position.z()) << " " << int(point.color[0]) << " "
          << int(point.color[1]) << " " << int(point.color[2]) << " "
          << fmt(point.reproj_error);
      for (const auto& entry : point.track) {
        out << " " << entry.image_id << " " << entry.point2d_idx;
      }
      out << "\n";
    }
    if (!out.good()) fail(ErrorCode::IoFailure, "write failed: points3D.txt");
  }
}

/// Binary counterpart of write_reconstruction_text, in the COLMAP .bin layout.
/// Used to produce binary fixtures and to exercise the binary parse path.
inline void write_reconstruction_binary(const Reconstruction& recon,
                                        const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create directory " + dir.string());

  auto open = [](const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    return out;
  };
  auto put = [](std::ofstream& out, auto value) {
    const auto le = detail::from_little_endian(value);  // involutive swap
    out.write(reinterpret_cast<const char*>(&le), sizeof(le));
  };

  {
    auto out = open(dir / "cameras.bin");
    put(out, static_cast<std::uint64_t>(recon.cameras.size()));
    for (const auto& [id, cam] : recon.cameras) {
      put(out, static_cast<std::int32_t>(id));
      const bool simple = cam.model == CameraModelId::kSimplePinhole && cam.fx == cam.fy;
      put(out, static_cast<std::int32_t>(simple ? 0 : 1));
      put(out, cam.width);
      put(out, cam.height);
      if (simple) {
        put(out, cam.fx);
      } else {
        put(out, cam.fx);
        put(out, cam.fy);
      }
      put(out, cam.cx);
      put(out, cam.cy);
    }
    if (!out.good()) fail(ErrorCode::IoFailure, "write failed: cameras.bin");
  }

  {
    auto out = open(dir / "images.bin");
    put(out, static_cast<std::uint64_t>(recon.images.size()));
    for (const auto& [id, image] : recon.images) {
      put(out, static_cast<std::int32_t>(id));
      put(out, image.rotation.w());
      put(out, image.rotation.x());
      put(out, image.rotation.y());
      put(out, image.rotation.z());
      put(out, image.translation.x());
      put(out, image.translation.y());
      put(out, image.translation.z());
      put(out, static_cast<std::int32_t>(image.camera_id));
      out.write(image.name.c_str(), static_cast<std::streamsize>(image.name.size() + 1));
      put(out, static_cast<std::uint64_t>(image.observations.size()));
      for (const auto& obs : image.observations) {
        put(out, obs.x);
        put(out, obs.y);
        put(out, obs.point3d_id);
      }
    }
    if (!out.good()) fail(ErrorCode::IoFailure, "write failed: images.bin");
  }

  {
    auto out = open(dir / "points3D.bin");
    put(out, static_cast<std::uint64_t>(recon.points.size()));
    for (const auto& [id, point] : recon.points) {
      put(out, id);
      put(out, point.position.x());
      put(out, point.position.y());
      put(out, point.position.z());
      put(out, point.color[0]);
      put(out, point.color[1]);
      put(out, point.color[2]);
      put(out, point.reproj_error);
      put(out, static_cast<std::uint64_t>(point.track.size()));
      for (const auto& entry : point.track) {
        put(out, static_cast<std::int32_t>(entry.image_id));
        put(out, static_cast<std::int32_t>(entry.point2d_idx));
      }
    }
    if (!out.good()) fail(ErrorCode::IoFailure, "write failed: points3D.bin");
  }
}

}  // namespace sfmttr
