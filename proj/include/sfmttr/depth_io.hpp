#pragma once

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sfmttr/colmap_io.hpp"  // detail::read_file, split_tokens, format_double
#include "sfmttr/error.hpp"
#include "sfmttr/geometry.hpp"
#include "sfmttr/tensor.hpp"

namespace sfmttr {

// ---------------------------------------------------------------------------
// PFM — float maps, scale header -1.0 (little-endian), rows stored bottom-up.
// Non-positive or non-finite samples mark invalid pixels.
// ---------------------------------------------------------------------------

namespace detail {

struct PfmHeader {
  bool color = false;
  int width = 0;
  int height = 0;
  bool little_endian = true;
  std::size_t data_offset = 0;
};

inline PfmHeader parse_pfm_header(std::string_view bytes, const std::string& label) {
  PfmHeader header;
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) fail(ErrorCode::TruncatedFile, label + ": incomplete PFM header");
    return std::string(bytes.substr(start, pos - start));
  };

  const std::string magic = next_token();
  if (magic == "PF") {
    header.color = true;
  } else if (magic == "Pf") {
    header.color = false;
  } else {
    fail(ErrorCode::MalformedLine, label + ": not a PFM file (magic '" + magic + "')");
  }
  header.width = static_cast<int>(parse_int(next_token(), label));
  header.height = static_cast<int>(parse_int(next_token(), label));
  if (header.width <= 0 || header.height <= 0) {
    fail(ErrorCode::MalformedLine, label + ": non-positive PFM dimensions");
  }
  const double scale = parse_double(next_token(), label);
  header.little_endian = scale < 0.0;
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size()) fail(ErrorCode::TruncatedFile, label + ": missing PFM raster");
  header.data_offset = pos + 1;
  return header;
}

inline std::vector<float> read_pfm_raster(std::string_view bytes, const PfmHeader& header,
                                          const std::string& label) {
  const std::size_t values =
      static_cast<std::size_t>(header.width) * header.height * (header.color ? 3 : 1);
  if (header.data_offset + values * sizeof(float) > bytes.size()) {
    fail(ErrorCode::TruncatedFile, label + ": PFM raster shorter than header promises");
  }
  std::vector<float> raster(values);
  std::memcpy(raster.data(), bytes.data() + header.data_offset, values * sizeof(float));
  const bool native_little = std::endian::native == std::endian::little;
  if (header.little_endian != native_little) {
    for (float& v : raster) {
      auto* b = reinterpret_cast<unsigned char*>(&v);
      std::swap(b[0], b[3]);
      std::swap(b[1], b[2]);
    }
  }
  return raster;
}

}  // namespace detail

inline DepthMap read_pfm_depth(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const auto header = detail::parse_pfm_header(bytes, path.filename().string());
  if (header.color) {
    fail(ErrorCode::MalformedLine,
         path.filename().string() + ": expected grayscale PFM, got color");
  }
  const auto raster = detail::read_pfm_raster(bytes, header, path.filename().string());
  DepthMap map(header.width, header.height);
  for (int y = 0; y < header.height; ++y) {
    const int src_row = header.height - 1 - y;  // bottom-up storage
    for (int x = 0; x < header.width; ++x) {
      const float v = raster[static_cast<std::size_t>(src_row) * header.width + x];
      if (std::isfinite(v) && v > 0.0f) {
        map.set(x, y, v);
      } else {
        map.set_invalid(x, y);
      }
    }
  }
  return map;
}

inline void write_pfm_depth(const DepthMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << "Pf\n" << map.width() << " " << map.height() << "\n-1.0\n";
  std::vector<float> row(map.width());
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) {
      row[x] = map.valid(x, y) ? static_cast<float>(map.at(x, y)) : 0.0f;
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out.good()) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

/// Color PFM for network input images (3 channels).
inline Tensor3 read_pfm_image(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const auto header = detail::parse_pfm_header(bytes, path.filename().string());
  if (!header.color) {
    fail(ErrorCode::MalformedLine,
         path.filename().string() + ": expected color PFM, got grayscale");
  }
  const auto raster = detail::read_pfm_raster(bytes, header, path.filename().string());
  Tensor3 image(3, header.height, header.width);
  for (int y = 0; y < header.height; ++y) {
    const int src_row = header.height - 1 - y;
    for (int x = 0; x < header.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(src_row) * header.width + x) * 3;
      for (int c = 0; c < 3; ++c) image.at(c, y, x) = raster[base + c];
    }
  }
  return image;
}

inline void write_pfm_image(const Tensor3& image, const std::filesystem::path& path) {
  if (image.channels != 3) {
    fail(ErrorCode::ShapeMismatch, "color PFM requires 3 channels, got " +
                                       std::to_string(image.channels));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << "PF\n" << image.width << " " << image.height << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(image.width) * 3);
  for (int y = image.height - 1; y >= 0; --y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        row[static_cast<std::size_t>(x) * 3 + c] = static_cast<float>(image.at(c, y, x));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out.good()) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// 16-bit PNG — depth = stored value / 256, 0 marks invalid (KITTI convention).
// ---------------------------------------------------------------------------

inline DepthMap read_png16_depth(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (fp == nullptr) fail(ErrorCode::MissingFile, "cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    if (png != nullptr) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::IoFailure, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::MalformedLine, path.filename().string() + ": PNG decode failed");
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::MalformedLine,
         path.filename().string() + ": expected 16-bit grayscale PNG");
  }

  std::vector<std::uint8_t> row_bytes(static_cast<std::size_t>(width) * 2);
  DepthMap map(width, height);
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row_bytes.data(), nullptr);
    for (int x = 0; x < width; ++x) {
      // PNG stores 16-bit samples big-endian.
      const std::uint16_t raw = static_cast<std::uint16_t>(
          (row_bytes[2 * x] << 8) | row_bytes[2 * x + 1]);
      if (raw > 0) {
        map.set(x, y, raw / 256.0);
      } else {
        map.set_invalid(x, y);
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return map;
}

inline void write_png16_depth(const DepthMap& map, const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (fp == nullptr) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    if (png != nullptr) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::IoFailure, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::IoFailure, "PNG encode failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, map.width(), map.height(), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row_bytes(static_cast<std::size_t>(map.width()) * 2);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      std::uint16_t raw = 0;
      if (map.valid(x, y)) {
        const double scaled = std::round(map.at(x, y) * 256.0);
        raw = static_cast<std::uint16_t>(std::clamp(scaled, 1.0, 65535.0));
      }
      row_bytes[2 * x] = static_cast<std::uint8_t>(raw >> 8);
      row_bytes[2 * x + 1] = static_cast<std::uint8_t>(raw & 0xff);
    }
    png_write_row(png, row_bytes.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

// ---------------------------------------------------------------------------
// SparseDepthFrame CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kFrameCsvHeader =
    "image_id,point3d_id,u,v,d_sfm,d_nn,reproj_error";

inline void write_frame_csv(const SparseDepthFrame& frame,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  const auto& fmt = detail::format_double;
  out << kFrameCsvHeader << "\n";
  for (const auto& e : frame.entries) {
    out << frame.image_id << "," << e.point3d_id << "," << fmt(e.pixel.x()) << ","
        << fmt(e.pixel.y()) << "," << fmt(e.sfm_depth) << "," << fmt(e.nn_depth) << ","
        << fmt(e.reproj_error) << "\n";
  }
  if (!out.good()) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

inline SparseDepthFrame read_frame_csv(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const std::string label = path.filename().string();
  std::istringstream in(bytes);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::TruncatedFile, label + ": empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kFrameCsvHeader) {
    fail(ErrorCode::MalformedLine, label + ": unexpected CSV header '" + line + "'");
  }

  SparseDepthFrame frame;
  bool have_image_id = false;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = label + " line " + std::to_string(line_no);
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 7) {
      fail(ErrorCode::MalformedLine, where + ": expected 7 fields, got " +
                                         std::to_string(fields.size()));
    }
    const int image_id = static_cast<int>(detail::parse_int(fields[0], where));
    if (!have_image_id) {
      frame.image_id = image_id;
      have_image_id = true;
    } else if (image_id != frame.image_id) {
      fail(ErrorCode::MalformedLine, where + ": mixed image_ids in one frame CSV");
    }
    SparseDepthEntry entry;
    entry.point3d_id = detail::parse_int(fields[1], where);
    entry.pixel.x() = detail::parse_double(fields[2], where);
    entry.pixel.y() = detail::parse_double(fields[3], where);
    entry.sfm_depth = detail::parse_double(fields[4], where);
    entry.nn_depth = detail::parse_double(fields[5], where);
    entry.reproj_error = detail::parse_double(fields[6], where);
    frame.entries.push_back(entry);
  }
  return frame;
}

}  // namespace sfmttr
