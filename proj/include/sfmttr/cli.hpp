#pragma once

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sfmttr/alignment.hpp"
#include "sfmttr/colmap_io.hpp"
#include "sfmttr/config.hpp"
#include "sfmttr/depth_io.hpp"
#include "sfmttr/error.hpp"
#include "sfmttr/geometry.hpp"
#include "sfmttr/manifest.hpp"
#include "sfmttr/metrics.hpp"
#include "sfmttr/refiner.hpp"
#include "sfmttr/synth.hpp"
#include "sfmttr/version.hpp"

namespace sfmttr::cli {

namespace fs = std::filesystem;

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
      return 1;
    case ErrorCode::EmptyMask:
    case ErrorCode::ZeroMedian:
    case ErrorCode::BadBinEdges:
    case ErrorCode::DegenerateDenominator:
    case ErrorCode::EmptyInliers:
    case ErrorCode::NoUsableFrames:
      return 3;
    default:
      return 2;  // input / parse failures
  }
}

namespace detail {

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) {
    fail(ErrorCode::IoFailure, "cannot create directory " + dir.string());
  }
}

inline void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << content;
  if (!out.good()) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

/// Files in dir whose stem ends in an integer id, e.g. frame_12.csv or
/// synth_3.pfm, keyed by that id. Lexicographically smaller paths win ties.
inline std::map<int, fs::path> index_files_by_trailing_id(const fs::path& dir,
                                                          std::string_view extension) {
  if (!fs::is_directory(dir)) {
    fail(ErrorCode::MissingFile, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::map<int, fs::path> out;
  for (const auto& path : files) {
    const std::string stem = path.stem().string();
    const std::size_t pos = stem.find_last_not_of("0123456789");
    const std::string digits = pos == std::string::npos ? stem : stem.substr(pos + 1);
    if (digits.empty() || digits.size() > 9) continue;
    out.emplace(std::stoi(digits), path);  // keeps the first (sorted) match
  }
  return out;
}

inline DepthMap read_depth_auto(const fs::path& path) {
  if (path.extension() == ".png") return read_png16_depth(path);
  return read_pfm_depth(path);
}

/// Depth-map file for an image name: exact name, then stem.pfm / stem.png.
inline std::optional<fs::path> find_depth_map(const fs::path& dir,
                                              const std::string& image_name) {
  const fs::path direct = dir / image_name;
  if (fs::exists(direct)) return direct;
  const std::string stem = fs::path(image_name).stem().string();
  for (const char* ext : {".pfm", ".png"}) {
    const fs::path candidate = dir / (stem + ext);
    if (fs::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 0;
};

inline RunConfig resolve_config(const CommonOptions& common) {
  if (common.config_path.empty()) {
    RunConfig config;
    config.validate();
    return config;
  }
  return load_run_config(common.config_path);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline int cmd_parse(const std::string& input, const std::string& output,
                     const detail::CommonOptions& common) {
  const RunConfig config = detail::resolve_config(common);
  detail::ensure_dir(output);

  nlohmann::json report;
  Reconstruction recon;
  std::string violations;
  {
    const auto [path, format] = sfmttr::detail::pick_model_file(input, "cameras");
    recon.cameras = parse_cameras(sfmttr::detail::read_file(path), format);
    report["format"]["cameras"] = format == ModelFormat::kBinary ? "binary" : "text";
  }
  {
    const auto [path, format] = sfmttr::detail::pick_model_file(input, "images");
    recon.images = parse_images(sfmttr::detail::read_file(path), format);
    report["format"]["images"] = format == ModelFormat::kBinary ? "binary" : "text";
  }
  {
    const auto [path, format] = sfmttr::detail::pick_model_file(input, "points3D");
    recon.points = parse_points3d(sfmttr::detail::read_file(path), format);
    report["format"]["points3D"] = format == ModelFormat::kBinary ? "binary" : "text";
  }

  std::size_t observations = 0;
  std::size_t triangulated = 0;
  for (const auto& [id, image] : recon.images) {
    observations += image.observations.size();
    for (const auto& obs : image.observations) {
      if (obs.has_point3d()) ++triangulated;
    }
  }
  report["cameras"] = recon.cameras.size();
  report["images"] = recon.images.size();
  report["points"] = recon.points.size();
  report["observations"] = observations;
  report["triangulated_observations"] = triangulated;

  bool ok = true;
  try {
    validate_integrity(recon);
  } catch (const Error& e) {
    ok = false;
    violations = e.what();
  }
  report["ok"] = ok;
  if (!ok) report["violations"] = violations;

  detail::write_json_file(fs::path(output) / "integrity_report.json", report);
  write_manifest(output, "parse", {input}, run_config_to_json(config), common.seed);
  if (!ok) {
    std::cerr << "error: " << violations << "\n";
    return exit_code_for(ErrorCode::IntegrityViolation);
  }
  return 0;
}

inline int cmd_extract(const std::string& input, const std::string& depth_maps,
                       const std::string& output, const detail::CommonOptions& common) {
  const RunConfig config = detail::resolve_config(common);
  const Reconstruction recon = load_reconstruction(input);
  detail::ensure_dir(output);

  nlohmann::json stats_report;
  int matched = 0;
  for (const auto& [image_id, image] : recon.images) {
    const auto map_path = detail::find_depth_map(depth_maps, image.name);
    if (!map_path.has_value()) {
      stats_report[std::to_string(image_id)] = {{"skipped", "no depth map for image '" +
                                                                image.name + "'"}};
      continue;
    }
    ++matched;
    const DepthMap map = detail::read_depth_auto(*map_path);
    ExtractionStats stats;
    const SparseDepthFrame frame = extract_sparse_depths(recon, image_id, map, {}, &stats);
    write_frame_csv(frame, fs::path(output) / ("frame_" + std::to_string(image_id) + ".csv"));
    stats_report[std::to_string(image_id)] = {{"candidates", stats.candidates},
                                              {"behind_camera", stats.behind_camera},
                                              {"out_of_bounds", stats.out_of_bounds},
                                              {"invalid_sample", stats.invalid_sample},
                                              {"emitted", stats.emitted}};
  }
  if (matched == 0) {
    fail(ErrorCode::MissingFile, "no depth maps matched any registered image in " + depth_maps);
  }
  detail::write_json_file(fs::path(output) / "extraction_stats.json", stats_report);
  write_manifest(output, "extract", {input, depth_maps}, run_config_to_json(config),
                 common.seed);
  return 0;
}

inline int cmd_align(const std::string& input, const std::string& output,
                     const std::string& scaling, const detail::CommonOptions& common) {
  RunConfig config = detail::resolve_config(common);
  config.alignment.seed = common.seed;
  detail::ensure_dir(output);

  const auto frame_files = detail::index_files_by_trailing_id(input, ".csv");
  if (frame_files.empty()) {
    fail(ErrorCode::MissingFile, "no frame CSVs found in " + input);
  }

  nlohmann::json summary;
  summary["accepted"] = nlohmann::json::array();
  summary["rejected"] = nlohmann::json::array();
  int accepted = 0;
  for (const auto& [id, path] : frame_files) {
    const SparseDepthFrame frame = read_frame_csv(path);
    if (frame.entries.empty()) {
      fail(ErrorCode::EmptyInput, path.filename().string() + ": frame has no entries");
    }

    std::optional<ScaleAlignment> alignment;
    if (scaling == "median") {
      // Median-scaling ablation baseline: a single ratio median, with every
      // entry treated as a usable inlier. Frames below the size gate are
      // still rejected.
      const auto pairs = pairs_from_frame(frame);
      if (static_cast<int>(pairs.size()) >= config.alignment.min_points) {
        ScaleAlignment a;
        a.scale = align_median(pairs);
        a.ransac_scale = a.scale;
        a.stage1_inliers.resize(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          a.stage1_inliers[i] = static_cast<int>(i);
        }
        a.stage2_inliers = a.stage1_inliers;
        a.iterations_used = 0;
        a.seed = config.alignment.seed;
        alignment = a;
      }
    } else {
      alignment = align_frame(frame, config.alignment);
    }

    if (alignment.has_value()) {
      ++accepted;
      detail::write_json_file(
          fs::path(output) / ("alignment_" + std::to_string(frame.image_id) + ".json"),
          alignment_to_json(frame.image_id, *alignment));
      summary["accepted"].push_back(frame.image_id);
    } else {
      summary["rejected"].push_back(frame.image_id);
    }
  }
  summary["method"] = scaling;
  detail::write_json_file(fs::path(output) / "alignments_summary.json", summary);
  write_manifest(output, "align", {input}, run_config_to_json(config), common.seed);
  if (accepted == 0) {
    std::cerr << "error: AlignmentRejected: every frame failed the acceptance gates\n";
    return 3;
  }
  return 0;
}

inline int cmd_refine(const std::string& model_path, const std::string& images_dir,
                      const std::string& frames_dir, const std::string& alignments_dir,
                      const std::string& output, const std::string& mode,
                      const detail::CommonOptions& common) {
  RunConfig config = detail::resolve_config(common);
  if (mode == "encoder_only") config.ttr.mode = TtrMode::kEncoderOnly;
  if (mode == "full_model") config.ttr.mode = TtrMode::kFullModel;
  config.ttr.sampling_seed = common.seed;
  detail::ensure_dir(output);

  ReferenceModel model(0);
  read_model_params(model, model_path);

  const auto frame_files = detail::index_files_by_trailing_id(frames_dir, ".csv");
  const auto alignment_files = detail::index_files_by_trailing_id(alignments_dir, ".json");
  const auto image_files = detail::index_files_by_trailing_id(images_dir, ".pfm");

  std::vector<RefinementFrame> frames;
  for (const auto& [id, alignment_path] : alignment_files) {
    const auto frame_it = frame_files.find(id);
    if (frame_it == frame_files.end()) {
      fail(ErrorCode::MissingFile, "alignment for image " + std::to_string(id) +
                                       " has no frame CSV in " + frames_dir);
    }
    const auto image_it = image_files.find(id);
    if (image_it == image_files.end()) {
      fail(ErrorCode::MissingFile, "alignment for image " + std::to_string(id) +
                                       " has no input image in " + images_dir);
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(sfmttr::detail::read_file(alignment_path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::MalformedLine, alignment_path.string() + ": " + e.what());
    }
    const ScaleAlignment alignment = alignment_from_json(j);
    const SparseDepthFrame frame = read_frame_csv(frame_it->second);

    RefinementFrame rf;
    rf.image_id = id;
    rf.image = read_pfm_image(image_it->second);
    rf.supervision = make_frame_supervision(frame, alignment);
    if (rf.supervision.size() == 0) continue;
    frames.push_back(std::move(rf));
  }

  const auto trace = refine(model, frames, config.ttr);

  write_model_params(model, fs::path(output) / "model_refined.sftr");
  write_loss_trace_csv(trace, fs::path(output) / "loss_trace.csv");

  // Refined predictions for every available input image, named after the
  // image files so they pair with the gt maps downstream.
  const fs::path pred_dir = fs::path(output) / "pred";
  detail::ensure_dir(pred_dir);
  for (const auto& [id, image_path] : image_files) {
    const Tensor3 image = read_pfm_image(image_path);
    const DepthMap pred = model.forward(image);
    write_pfm_depth(pred, pred_dir / (image_path.stem().string() + ".pfm"));
  }

  write_manifest(output, "refine", {model_path, images_dir, frames_dir, alignments_dir},
                 run_config_to_json(config), common.seed);
  return 0;
}

inline int cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
                    const std::string& output, const std::string& crop,
                    const std::string& scaling, const detail::CommonOptions& common) {
  RunConfig config = detail::resolve_config(common);
  if (crop == "none") config.eval.crop = CropType::kNone;
  if (crop == "eigen") config.eval.crop = CropType::kEigen;
  if (scaling == "median") config.eval.scaling = ScalingType::kMedian;
  if (scaling == "none") config.eval.scaling = ScalingType::kNone;
  detail::ensure_dir(output);

  if (!fs::is_directory(pred_dir)) {
    fail(ErrorCode::MissingFile, pred_dir + " is not a directory");
  }
  std::vector<fs::path> pred_files;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".pfm" || ext == ".png") pred_files.push_back(entry.path());
  }
  std::sort(pred_files.begin(), pred_files.end());
  if (pred_files.empty()) {
    fail(ErrorCode::MissingFile, "no .pfm/.png predictions in " + pred_dir);
  }

  nlohmann::json per_image;
  std::vector<DepthMetrics> all_metrics;
  std::string csvdoc = std::string(kMetricsCsvHeader) + "\n";
  for (const auto& pred_path : pred_files) {
    const auto gt_path = detail::find_depth_map(gt_dir, pred_path.filename().string());
    if (!gt_path.has_value()) {
      fail(ErrorCode::MissingFile,
           "no ground-truth map for " + pred_path.filename().string() + " in " + gt_dir);
    }
    const DepthMap pred = detail::read_depth_auto(pred_path);
    const DepthMap gt = detail::read_depth_auto(*gt_path);
    const DepthMetrics metrics = compute_metrics(pred, gt, config.eval);
    per_image[pred_path.filename().string()] = metrics_to_json(metrics);
    csvdoc += metrics_csv_row(pred_path.filename().string(), metrics) + "\n";
    all_metrics.push_back(metrics);
  }
  const DepthMetrics aggregate = aggregate_metrics(all_metrics);
  csvdoc += metrics_csv_row("aggregate", aggregate) + "\n";

  nlohmann::json report;
  report["per_image"] = per_image;
  report["aggregate"] = metrics_to_json(aggregate);
  detail::write_json_file(fs::path(output) / "metrics.json", report);
  detail::write_text_file(fs::path(output) / "metrics.csv", csvdoc);
  write_manifest(output, "eval", {pred_dir, gt_dir}, run_config_to_json(config),
                 common.seed);
  return 0;
}

inline int cmd_simulate(const std::string& output, const detail::CommonOptions& common) {
  const RunConfig config = detail::resolve_config(common);
  detail::ensure_dir(output);

  const std::uint64_t scene_seed = common.seed;
  const std::uint64_t image_seed = common.seed + 0x9e3779b97f4a7c15ull;
  const std::uint64_t corrupt_seed = common.seed + 0x2545f4914f6cdd1dull;
  const std::uint64_t fit_seed = common.seed + 0x94d049bb133111ebull;

  const SyntheticScene scene = generate_scene(config.scene, scene_seed);
  const auto images = render_images(scene, image_seed);
  const CorruptionResult corruption = corrupt(scene, config.noise, corrupt_seed);

  export_scene(scene, images, corruption, output);

  // The corruption maps are the deliberately wrong depth estimate the initial
  // model is fitted to; keep them inspectable under pseudo/.
  const fs::path pseudo_dir = fs::path(output) / "pseudo";
  detail::ensure_dir(pseudo_dir);
  for (const auto& [image_id, image] : scene.reconstruction.images) {
    write_pfm_depth(corruption.network_maps[static_cast<std::size_t>(image_id - 1)],
                    pseudo_dir / image.name);
  }

  ReferenceModel model(config.model_seed);
  if (config.prefit_steps > 0) {
    FitConfig fit;
    fit.steps = config.prefit_steps;
    fit.learning_rate = config.prefit_learning_rate;
    fit.seed = fit_seed;
    fit_to_depth_maps(model, images, corruption.network_maps, fit);
  }
  write_model_params(model, fs::path(output) / "model_init.sftr");

  // The network depths the pipeline consumes are the model's own predictions,
  // exported under nn/ (overwriting the raw corruption maps placed there by
  // export_scene): extraction and alignment then see exactly what the model
  // would predict.
  for (const auto& [image_id, image] : scene.reconstruction.images) {
    const DepthMap pred = model.forward(images[static_cast<std::size_t>(image_id - 1)]);
    write_pfm_depth(pred, fs::path(output) / "nn" / image.name);
  }

  nlohmann::json meta;
  meta["gt_scale"] = scene.gt_scale;
  meta["n_images"] = config.scene.n_images;
  meta["surviving_points"] = scene.reconstruction.points.size();
  auto& names = meta["images"] = nlohmann::json::object();
  for (const auto& [image_id, image] : scene.reconstruction.images) {
    names[std::to_string(image_id)] = image.name;
  }
  detail::write_json_file(fs::path(output) / "scene_meta.json", meta);
  write_manifest(output, "simulate", {}, run_config_to_json(config), common.seed);
  return 0;
}

inline int cmd_bin_errors(const std::string& pred_dir, const std::string& gt_dir,
                          const std::string& output, const detail::CommonOptions& common) {
  const RunConfig config = detail::resolve_config(common);
  detail::ensure_dir(output);

  if (!fs::is_directory(pred_dir)) {
    fail(ErrorCode::MissingFile, pred_dir + " is not a directory");
  }
  std::vector<fs::path> pred_files;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".pfm" || ext == ".png") pred_files.push_back(entry.path());
  }
  std::sort(pred_files.begin(), pred_files.end());
  if (pred_files.empty()) {
    fail(ErrorCode::MissingFile, "no .pfm/.png predictions in " + pred_dir);
  }

  const auto& edges = config.bin_edges;
  if (edges.size() < 2) fail(ErrorCode::BadBinEdges, "config.bin_edges needs >= 2 edges");

  // Pool pixels across images per bin; per-image median scaling first.
  struct BinAccum {
    double abs_rel = 0, sq_rel = 0, sq = 0, sq_log = 0;
    long d1 = 0, d2 = 0, d3 = 0, count = 0;
  };
  std::vector<BinAccum> accums(edges.size() - 1);

  for (const auto& pred_path : pred_files) {
    const auto gt_path = detail::find_depth_map(gt_dir, pred_path.filename().string());
    if (!gt_path.has_value()) {
      fail(ErrorCode::MissingFile,
           "no ground-truth map for " + pred_path.filename().string() + " in " + gt_dir);
    }
    const DepthMap pred = detail::read_depth_auto(pred_path);
    const DepthMap gt = detail::read_depth_auto(*gt_path);
    if (pred.width() != gt.width() || pred.height() != gt.height()) {
      fail(ErrorCode::ShapeMismatch, pred_path.filename().string() + ": resolution mismatch");
    }
    const PixelMask mask = sfmttr::detail::evaluation_mask(pred, gt, config.eval);
    if (mask.count() == 0) continue;
    const double scale = sfmttr::detail::scaling_factor(pred, gt, mask, config.eval);
    for (int y = 0; y < gt.height(); ++y) {
      for (int x = 0; x < gt.width(); ++x) {
        if (!mask.at(x, y)) continue;
        const double g = gt.at(x, y);
        const auto bin_it = std::upper_bound(edges.begin(), edges.end(), g);
        if (bin_it == edges.begin() || bin_it == edges.end()) continue;
        BinAccum& acc = accums[static_cast<std::size_t>(bin_it - edges.begin()) - 1];
        const double p =
            std::clamp(pred.at(x, y) * scale, config.eval.min_depth, config.eval.max_depth);
        const double diff = p - g;
        acc.abs_rel += std::abs(diff) / g;
        acc.sq_rel += diff * diff / g;
        acc.sq += diff * diff;
        acc.sq_log += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
        const double ratio = std::max(p / g, g / p);
        if (ratio < 1.25) ++acc.d1;
        if (ratio < 1.25 * 1.25) ++acc.d2;
        if (ratio < 1.25 * 1.25 * 1.25) ++acc.d3;
        ++acc.count;
      }
    }
  }

  std::string csvdoc = std::string(kBinsCsvHeader) + "\n";
  for (std::size_t b = 0; b < accums.size(); ++b) {
    DepthBinMetrics bin;
    bin.bin_lo = edges[b];
    bin.bin_hi = edges[b + 1];
    const BinAccum& acc = accums[b];
    if (acc.count > 0) {
      const double n = static_cast<double>(acc.count);
      bin.empty = false;
      bin.metrics.abs_rel = acc.abs_rel / n;
      bin.metrics.sq_rel = acc.sq_rel / n;
      bin.metrics.rmse = std::sqrt(acc.sq / n);
      bin.metrics.rmse_log = std::sqrt(acc.sq_log / n);
      bin.metrics.delta1 = acc.d1 / n;
      bin.metrics.delta2 = acc.d2 / n;
      bin.metrics.delta3 = acc.d3 / n;
      bin.metrics.valid_pixel_count = acc.count;
    }
    csvdoc += bin_csv_row(bin) + "\n";
  }
  detail::write_text_file(fs::path(output) / "bins.csv", csvdoc);
  write_manifest(output, "bin-errors", {pred_dir, gt_dir}, run_config_to_json(config),
                 common.seed);
  return 0;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Multi-view test-time refinement pipeline for single-view depth models"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  detail::CommonOptions common;
  std::string input, output, depth_maps, model_path, images_dir, frames_dir, alignments_dir;
  std::string pred_dir, gt_dir;
  std::string mode, scaling = "robust", eval_scaling, crop;

  auto add_common = [&common](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "JSON run configuration");
    cmd->add_option("--seed", common.seed, "Seed for all randomized stages");
  };

  CLI::App* parse_cmd = app.add_subcommand("parse", "Read a sparse model and report integrity");
  parse_cmd->add_option("--input", input, "Sparse model directory")->required();
  parse_cmd->add_option("--output", output, "Report directory")->required();
  add_common(parse_cmd);

  CLI::App* extract_cmd =
      app.add_subcommand("extract", "Extract sparse multi-view depths per image");
  extract_cmd->add_option("--input", input, "Sparse model directory")->required();
  extract_cmd->add_option("--depth-maps", depth_maps, "Network depth-map directory")
      ->required();
  extract_cmd->add_option("--output", output, "Frame CSV directory")->required();
  add_common(extract_cmd);

  CLI::App* align_cmd = app.add_subcommand("align", "Robust per-frame scale alignment");
  align_cmd->add_option("--input", input, "Frame CSV directory")->required();
  align_cmd->add_option("--output", output, "Alignment JSON directory")->required();
  align_cmd->add_option("--scaling", scaling, "robust (two-stage) or median (baseline)")
      ->check(CLI::IsMember({"robust", "median"}));
  add_common(align_cmd);

  CLI::App* refine_cmd = app.add_subcommand("refine", "Test-time refinement of the model");
  refine_cmd->add_option("--model", model_path, "Initial model parameters (.sftr)")
      ->required();
  refine_cmd->add_option("--images", images_dir, "Input image directory (color PFM)")
      ->required();
  refine_cmd->add_option("--frames", frames_dir, "Frame CSV directory")->required();
  refine_cmd->add_option("--alignments", alignments_dir, "Alignment JSON directory")
      ->required();
  refine_cmd->add_option("--output", output, "Output directory")->required();
  refine_cmd->add_option("--mode", mode, "encoder_only or full_model")
      ->check(CLI::IsMember({"encoder_only", "full_model"}));
  add_common(refine_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "Depth metrics for prediction maps");
  eval_cmd->add_option("--pred", pred_dir, "Prediction depth-map directory")->required();
  eval_cmd->add_option("--gt", gt_dir, "Ground-truth depth-map directory")->required();
  eval_cmd->add_option("--output", output, "Metrics directory")->required();
  eval_cmd->add_option("--crop", crop, "none or eigen")
      ->check(CLI::IsMember({"none", "eigen"}));
  eval_cmd->add_option("--scaling", eval_scaling, "median or none")
      ->check(CLI::IsMember({"median", "none"}));
  add_common(eval_cmd);

  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Generate a synthetic scene on disk");
  simulate_cmd->add_option("--output", output, "Scene directory")->required();
  add_common(simulate_cmd);

  CLI::App* bin_cmd = app.add_subcommand("bin-errors", "Depth-binned error curves");
  bin_cmd->add_option("--pred", pred_dir, "Prediction depth-map directory")->required();
  bin_cmd->add_option("--gt", gt_dir, "Ground-truth depth-map directory")->required();
  bin_cmd->add_option("--output", output, "Output directory")->required();
  add_common(bin_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are exit 1; --help/--version exit 0
  }

  try {
    if (app.got_subcommand(parse_cmd)) return cmd_parse(input, output, common);
    if (app.got_subcommand(extract_cmd)) return cmd_extract(input, depth_maps, output, common);
    if (app.got_subcommand(align_cmd)) return cmd_align(input, output, scaling, common);
    if (app.got_subcommand(refine_cmd)) {
      return cmd_refine(model_path, images_dir, frames_dir, alignments_dir, output, mode,
                        common);
    }
    if (app.got_subcommand(eval_cmd)) {
      return cmd_eval(pred_dir, gt_dir, output, crop, eval_scaling, common);
    }
    if (app.got_subcommand(simulate_cmd)) return cmd_simulate(output, common);
    if (app.got_subcommand(bin_cmd)) return cmd_bin_errors(pred_dir, gt_dir, output, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace sfmttr::cli
