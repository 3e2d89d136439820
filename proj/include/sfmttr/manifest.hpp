#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfmttr/colmap_io.hpp"  // detail::read_file
#include "sfmttr/error.hpp"
#include "sfmttr/version.hpp"

namespace sfmttr {

inline std::uint64_t fnv1a_hash(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    hash ^= static_cast<std::uint8_t>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

inline std::uint64_t hash_file(const std::filesystem::path& path) {
  return fnv1a_hash(detail::read_file(path));
}

/// Hash of a file, or of a directory's files (sorted by relative path).
inline nlohmann::json hash_input(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t combined = 0xcbf29ce484222325ull;
    for (const auto& file : files) {
      combined ^= fnv1a_hash(fs::relative(file, path).generic_string());
      combined *= 0x100000001b3ull;
      combined ^= hash_file(file);
      combined *= 0x100000001b3ull;
    }
    return {{"path", path.generic_string()},
            {"fnv1a64", combined},
            {"files", files.size()}};
  }
  return {{"path", path.generic_string()}, {"fnv1a64", hash_file(path)}};
}

/// Provenance record written next to every subcommand's outputs. The
/// timestamp is the only field allowed to differ between reruns of an
/// otherwise identical invocation.
inline void write_manifest(const std::filesystem::path& out_dir,
                           const std::string& subcommand,
                           const std::vector<std::filesystem::path>& inputs,
                           const nlohmann::json& resolved_config, std::uint64_t seed) {
  nlohmann::json manifest;
  manifest["tool_version"] = kVersion;
  manifest["subcommand"] = subcommand;
  manifest["seed"] = seed;
  manifest["resolved_config"] = resolved_config;
  manifest["timestamp_utc"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  auto& input_list = manifest["inputs"] = nlohmann::json::array();
  for (const auto& input : inputs) input_list.push_back(hash_input(input));

  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) {
    fail(ErrorCode::IoFailure, "cannot write manifest in " + out_dir.string());
  }
  out << manifest.dump(2) << "\n";
}

}  // namespace sfmttr
