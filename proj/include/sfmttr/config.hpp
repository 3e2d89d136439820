#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfmttr/alignment.hpp"
#include "sfmttr/colmap_io.hpp"  // detail::read_file
#include "sfmttr/error.hpp"
#include "sfmttr/metrics.hpp"
#include "sfmttr/refiner.hpp"
#include "sfmttr/synth.hpp"

namespace sfmttr {

/// Full run configuration with defaults matching the reference
/// hyperparameters: RANSAC tau 0.5 for 20 iterations, Adam at 1e-4 for 200
/// steps, 80-unit depth cap, per-image median evaluation alignment. Unknown
/// keys in a config file are hard errors.
struct RunConfig {
  AlignmentConfig alignment;
  TtrConfig ttr;
  EvalConfig eval;
  NoiseConfig noise;
  SceneConfig scene;

  // simulate-only knobs: how the initial model is fit to the simulated
  // network maps before the refinement stage.
  int prefit_steps = 800;
  double prefit_learning_rate = 0.01;
  std::uint64_t model_seed = 1;

  std::vector<double> bin_edges = {0.5, 2.0, 4.0, 6.0};

  void validate() const {
    if (!(alignment.tau > 0.0)) fail(ErrorCode::InvalidConfig, "alignment.tau must be > 0");
    if (alignment.ransac_iterations < 1) {
      fail(ErrorCode::InvalidConfig, "alignment.ransac_iterations must be >= 1");
    }
    if (alignment.min_points < 1) {
      fail(ErrorCode::InvalidConfig, "alignment.min_points must be >= 1");
    }
    if (!(ttr.learning_rate > 0.0)) {
      fail(ErrorCode::InvalidConfig, "ttr.learning_rate must be > 0");
    }
    if (ttr.steps < 1) fail(ErrorCode::InvalidConfig, "ttr.steps must be >= 1");
    if (!(eval.min_depth > 0.0) || !(eval.max_depth > eval.min_depth)) {
      fail(ErrorCode::InvalidConfig, "eval depth caps must satisfy 0 < min < max");
    }
    if (prefit_steps < 0 || !(prefit_learning_rate > 0.0)) {
      fail(ErrorCode::InvalidConfig, "prefit settings out of range");
    }
  }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& section,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, section + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (key == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      fail(ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + section);
    }
  }
}

template <typename T>
void maybe_get(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::InvalidConfig, std::string("bad value for key '") + key + "'");
    }
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig config;
  detail::check_keys(j, "config",
                     {"alignment", "ttr", "eval", "noise", "scene", "simulate", "bin_edges"});

  if (j.contains("alignment")) {
    const auto& a = j.at("alignment");
    detail::check_keys(a, "alignment",
                       {"tau", "ransac_iterations", "min_points", "min_inlier_ratio"});
    detail::maybe_get(a, "tau", config.alignment.tau);
    detail::maybe_get(a, "ransac_iterations", config.alignment.ransac_iterations);
    detail::maybe_get(a, "min_points", config.alignment.min_points);
    detail::maybe_get(a, "min_inlier_ratio", config.alignment.min_inlier_ratio);
  }

  if (j.contains("ttr")) {
    const auto& t = j.at("ttr");
    detail::check_keys(t, "ttr",
                       {"learning_rate", "steps", "adam_beta1", "adam_beta2",
                        "adam_epsilon", "mode"});
    detail::maybe_get(t, "learning_rate", config.ttr.learning_rate);
    detail::maybe_get(t, "steps", config.ttr.steps);
    detail::maybe_get(t, "adam_beta1", config.ttr.adam_beta1);
    detail::maybe_get(t, "adam_beta2", config.ttr.adam_beta2);
    detail::maybe_get(t, "adam_epsilon", config.ttr.adam_epsilon);
    if (t.contains("mode")) {
      const auto mode = t.at("mode").get<std::string>();
      if (mode == "encoder_only") {
        config.ttr.mode = TtrMode::kEncoderOnly;
      } else if (mode == "full_model") {
        config.ttr.mode = TtrMode::kFullModel;
      } else {
        fail(ErrorCode::InvalidConfig, "ttr.mode must be encoder_only or full_model");
      }
    }
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    detail::check_keys(e, "eval",
                       {"max_depth", "min_depth", "crop", "scaling", "precomputed_scale"});
    detail::maybe_get(e, "max_depth", config.eval.max_depth);
    detail::maybe_get(e, "min_depth", config.eval.min_depth);
    detail::maybe_get(e, "precomputed_scale", config.eval.precomputed_scale);
    if (e.contains("crop")) {
      const auto crop = e.at("crop").get<std::string>();
      if (crop == "none") {
        config.eval.crop = CropType::kNone;
      } else if (crop == "eigen") {
        config.eval.crop = CropType::kEigen;
      } else {
        fail(ErrorCode::InvalidConfig, "eval.crop must be none or eigen");
      }
    }
    if (e.contains("scaling")) {
      const auto scaling = e.at("scaling").get<std::string>();
      if (scaling == "median") {
        config.eval.scaling = ScalingType::kMedian;
      } else if (scaling == "none") {
        config.eval.scaling = ScalingType::kNone;
      } else if (scaling == "precomputed") {
        config.eval.scaling = ScalingType::kPrecomputed;
      } else {
        fail(ErrorCode::InvalidConfig, "eval.scaling must be median, none or precomputed");
      }
    }
  }

  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    detail::check_keys(n, "noise",
                       {"sfm_rel_sigma", "nn_rel_sigma", "outlier_fraction", "outlier_min",
                        "outlier_max", "reproj_noise_sigma", "bias_amplitude"});
    detail::maybe_get(n, "sfm_rel_sigma", config.noise.sfm_rel_sigma);
    detail::maybe_get(n, "nn_rel_sigma", config.noise.nn_rel_sigma);
    detail::maybe_get(n, "outlier_fraction", config.noise.outlier_fraction);
    detail::maybe_get(n, "outlier_min", config.noise.outlier_min);
    detail::maybe_get(n, "outlier_max", config.noise.outlier_max);
    detail::maybe_get(n, "reproj_noise_sigma", config.noise.reproj_noise_sigma);
    detail::maybe_get(n, "bias_amplitude", config.noise.bias_amplitude);
  }

  if (j.contains("scene")) {
    const auto& s = j.at("scene");
    detail::check_keys(s, "scene",
                       {"n_images", "n_points", "camera_path", "image_width", "image_height",
                        "focal_length", "depth_near", "depth_far", "gt_scale"});
    detail::maybe_get(s, "n_images", config.scene.n_images);
    detail::maybe_get(s, "n_points", config.scene.n_points);
    detail::maybe_get(s, "image_width", config.scene.image_width);
    detail::maybe_get(s, "image_height", config.scene.image_height);
    detail::maybe_get(s, "focal_length", config.scene.focal_length);
    detail::maybe_get(s, "depth_near", config.scene.depth_near);
    detail::maybe_get(s, "depth_far", config.scene.depth_far);
    detail::maybe_get(s, "gt_scale", config.scene.gt_scale);
    if (s.contains("camera_path")) {
      const auto path = s.at("camera_path").get<std::string>();
      if (path == "forward") {
        config.scene.camera_path = CameraPathType::kForward;
      } else if (path == "orbit") {
        config.scene.camera_path = CameraPathType::kOrbit;
      } else {
        fail(ErrorCode::InvalidConfig, "scene.camera_path must be forward or orbit");
      }
    }
  }

  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    detail::check_keys(s, "simulate", {"prefit_steps", "prefit_learning_rate", "model_seed"});
    detail::maybe_get(s, "prefit_steps", config.prefit_steps);
    detail::maybe_get(s, "prefit_learning_rate", config.prefit_learning_rate);
    detail::maybe_get(s, "model_seed", config.model_seed);
  }

  detail::maybe_get(j, "bin_edges", config.bin_edges);

  config.validate();
  return config;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

inline nlohmann::json run_config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["alignment"] = {{"tau", config.alignment.tau},
                    {"ransac_iterations", config.alignment.ransac_iterations},
                    {"min_points", config.alignment.min_points},
                    {"min_inlier_ratio", config.alignment.min_inlier_ratio}};
  j["ttr"] = {{"learning_rate", config.ttr.learning_rate},
              {"steps", config.ttr.steps},
              {"adam_beta1", config.ttr.adam_beta1},
              {"adam_beta2", config.ttr.adam_beta2},
              {"adam_epsilon", config.ttr.adam_epsilon},
              {"mode", config.ttr.mode == TtrMode::kEncoderOnly ? "encoder_only"
                                                                : "full_model"}};
  j["eval"] = {{"max_depth", config.eval.max_depth},
               {"min_depth", config.eval.min_depth},
               {"crop", config.eval.crop == CropType::kEigen ? "eigen" : "none"},
               {"scaling", config.eval.scaling == ScalingType::kMedian ? "median"
                           : config.eval.scaling == ScalingType::kNone ? "none"
                                                                       : "precomputed"},
               {"precomputed_scale", config.eval.precomputed_scale}};
  j["noise"] = {{"sfm_rel_sigma", config.noise.sfm_rel_sigma},
                {"nn_rel_sigma", config.noise.nn_rel_sigma},
                {"outlier_fraction", config.noise.outlier_fraction},
                {"outlier_min", config.noise.outlier_min},
                {"outlier_max", config.noise.outlier_max},
                {"reproj_noise_sigma", config.noise.reproj_noise_sigma},
                {"bias_amplitude", config.noise.bias_amplitude}};
  j["scene"] = {{"n_images", config.scene.n_images},
                {"n_points", config.scene.n_points},
                {"camera_path", config.scene.camera_path == CameraPathType::kForward
                                    ? "forward"
                                    : "orbit"},
                {"image_width", config.scene.image_width},
                {"image_height", config.scene.image_height},
                {"focal_length", config.scene.focal_length},
                {"depth_near", config.scene.depth_near},
                {"depth_far", config.scene.depth_far},
                {"gt_scale", config.scene.gt_scale}};
  j["simulate"] = {{"prefit_steps", config.prefit_steps},
                   {"prefit_learning_rate", config.prefit_learning_rate},
                   {"model_seed", config.model_seed}};
  j["bin_edges"] = config.bin_edges;
  return j;
}

}  // namespace sfmttr
