#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfmttr/alignment.hpp"
#include "sfmttr/colmap_io.hpp"  // detail::ByteReader, format_double
#include "sfmttr/error.hpp"
#include "sfmttr/geometry.hpp"
#include "sfmttr/nn.hpp"
#include "sfmttr/rng.hpp"
#include "sfmttr/tensor.hpp"

namespace sfmttr {

// ---------------------------------------------------------------------------
// Model interface
// ---------------------------------------------------------------------------

/// Differentiable depth predictor with its parameters partitioned into an
/// encoder block (refined at test time) and a decoder block (frozen in
/// encoder-only mode). Forward is deterministic given the parameters.
class DepthModel {
 public:
  virtual ~DepthModel() = default;

  virtual std::vector<double>& encoder_params() = 0;
  virtual std::vector<double>& decoder_params() = 0;
  virtual const std::vector<double>& encoder_params() const = 0;
  virtual const std::vector<double>& decoder_params() const = 0;

  virtual DepthMap forward(const Tensor3& image) const = 0;

  /// Backpropagates a loss adjoint over the predicted depth map (one value
  /// per output pixel, row-major). grad_encoder must be non-null; pass a null
  /// grad_decoder to skip the decoder block.
  virtual void gradient(const Tensor3& image, const std::vector<double>& depth_adjoint,
                        std::vector<double>* grad_encoder,
                        std::vector<double>* grad_decoder) const = 0;

  /// Encoder-only convenience wrapper around gradient().
  std::vector<double> encoder_gradient(const Tensor3& image,
                                       const std::vector<double>& depth_adjoint) const {
    std::vector<double> grad;
    gradient(image, depth_adjoint, &grad, nullptr);
    return grad;
  }
};

// ---------------------------------------------------------------------------
// Reference model
// ---------------------------------------------------------------------------

/// Small convolutional encoder/decoder depth network used as the refinable
/// model at desk scale.
///
///   encoder: conv3x3 s2 (3->8), ReLU, conv3x3 s2 (8->16), ReLU
///   decoder: up x2, conv3x3 (16->8), ReLU, up x2, conv3x3 (8->1), sigmoid
///   depth:   d = 1 / (b_min + (b_max - b_min) * sigmoid), b = inverse depth
///
/// Output resolution equals input resolution; input sides must be multiples
/// of 4. Depths lie strictly inside (d_min, d_max).
class ReferenceModel final : public DepthModel {
 public:
  static constexpr double kDepthMin = 0.1;
  static constexpr double kDepthMax = 100.0;

  static constexpr int kEnc1Out = 8;
  static constexpr int kEnc2Out = 16;
  static constexpr int kDec1Out = 8;
  static constexpr int kDec2Out = 1;
  static constexpr int kInputChannels = 3;

  // Flat layouts: [enc1.w, enc1.b, enc2.w, enc2.b] and [dec1.w, dec1.b,
  // dec2.w, dec2.b].
  static constexpr int kEnc1W = kEnc1Out * kInputChannels * 9;
  static constexpr int kEnc2W = kEnc2Out * kEnc1Out * 9;
  static constexpr int kDec1W = kDec1Out * kEnc2Out * 9;
  static constexpr int kDec2W = kDec2Out * kDec1Out * 9;
  static constexpr int kEncoderParams = kEnc1W + kEnc1Out + kEnc2W + kEnc2Out;
  static constexpr int kDecoderParams = kDec1W + kDec1Out + kDec2W + kDec2Out;

  explicit ReferenceModel(std::uint64_t seed = 0)
      : encoder_(kEncoderParams), decoder_(kDecoderParams) {
    Rng rng(seed);
    auto init = [&rng](std::span<double> block, int fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (double& v : block) v = rng.uniform(-bound, bound);
    };
    auto enc = std::span<double>(encoder_);
    init(enc.subspan(0, kEnc1W + kEnc1Out), kInputChannels * 9);
    init(enc.subspan(kEnc1W + kEnc1Out), kEnc1Out * 9);
    auto dec = std::span<double>(decoder_);
    init(dec.subspan(0, kDec1W + kDec1Out), kEnc2Out * 9);
    init(dec.subspan(kDec1W + kDec1Out), kDec1Out * 9);
  }

  std::vector<double>& encoder_params() override { return encoder_; }
  std::vector<double>& decoder_params() override { return decoder_; }
  const std::vector<double>& encoder_params() const override { return encoder_; }
  const std::vector<double>& decoder_params() const override { return decoder_; }

  DepthMap forward(const Tensor3& image) const override {
    Workspace ws;
    run_forward(image, ws);
    DepthMap map(image.width, image.height);
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        map.set(x, y, depth_from_sigmoid(ws.sig.at(0, y, x)));
      }
    }
    return map;
  }

  void gradient(const Tensor3& image, const std::vector<double>& depth_adjoint,
                std::vector<double>* grad_encoder,
                std::vector<double>* grad_decoder) const override {
    if (depth_adjoint.size() != static_cast<std::size_t>(image.height) * image.width) {
      fail(ErrorCode::DimensionMismatch,
           "depth adjoint has " + std::to_string(depth_adjoint.size()) +
               " values, output has " +
               std::to_string(static_cast<std::size_t>(image.height) * image.width));
    }
    Workspace ws;
    run_forward(image, ws);

    // d = 1 / (b_min + db * s)  =>  dd/ds = -db * d^2
    constexpr double kBMin = 1.0 / kDepthMax;
    constexpr double kBMax = 1.0 / kDepthMin;
    constexpr double kDeltaB = kBMax - kBMin;
    Tensor3 grad_sig(1, image.height, image.width);
    for (std::size_t i = 0; i < depth_adjoint.size(); ++i) {
      const double s = ws.sig.data[i];
      const double depth = 1.0 / (kBMin + kDeltaB * s);
      grad_sig.data[i] = depth_adjoint[i] * (-kDeltaB * depth * depth);
    }

    std::vector<double> grad_dec(kDecoderParams, 0.0);
    std::vector<double> grad_enc(kEncoderParams, 0.0);
    auto dec = decoder_view();
    auto enc = encoder_view();
    auto gdec = std::span<double>(grad_dec);
    auto genc = std::span<double>(grad_enc);

    Tensor3 g = nn::sigmoid_backward(ws.sig, grad_sig);
    g = nn::conv3x3_backward(ws.up2, dec.w2, g, 1, gdec.subspan(kDec1W + kDec1Out, kDec2W),
                             gdec.subspan(kDec1W + kDec1Out + kDec2W, kDec2Out));
    g = nn::upsample2_nearest_backward(g);
    g = nn::relu_backward(ws.dec1_pre, g);
    g = nn::conv3x3_backward(ws.up1, dec.w1, g, 1, gdec.subspan(0, kDec1W),
                             gdec.subspan(kDec1W, kDec1Out));
    g = nn::upsample2_nearest_backward(g);
    g = nn::relu_backward(ws.enc2_pre, g);
    g = nn::conv3x3_backward(ws.enc1_post, enc.w2, g, 2, genc.subspan(kEnc1W + kEnc1Out, kEnc2W),
                             genc.subspan(kEnc1W + kEnc1Out + kEnc2W, kEnc2Out));
    g = nn::relu_backward(ws.enc1_pre, g);
    nn::conv3x3_backward(image, enc.w1, g, 2, genc.subspan(0, kEnc1W),
                         genc.subspan(kEnc1W, kEnc1Out));

    if (grad_encoder != nullptr) *grad_encoder = std::move(grad_enc);
    if (grad_decoder != nullptr) *grad_decoder = std::move(grad_dec);
  }

  static double depth_from_sigmoid(double s) {
    constexpr double kBMin = 1.0 / kDepthMax;
    constexpr double kBMax = 1.0 / kDepthMin;
    return 1.0 / (kBMin + (kBMax - kBMin) * s);
  }

 private:
  struct EncoderView {
    std::span<const double> w1, b1, w2, b2;
  };
  struct DecoderView {
    std::span<const double> w1, b1, w2, b2;
  };
  struct Workspace {
    Tensor3 enc1_pre, enc1_post, enc2_pre, enc2_post;
    Tensor3 up1, dec1_pre, dec1_post, up2, dec2_pre, sig;
  };

  EncoderView encoder_view() const {
    auto enc = std::span<const double>(encoder_);
    return {enc.subspan(0, kEnc1W), enc.subspan(kEnc1W, kEnc1Out),
            enc.subspan(kEnc1W + kEnc1Out, kEnc2W),
            enc.subspan(kEnc1W + kEnc1Out + kEnc2W, kEnc2Out)};
  }
  DecoderView decoder_view() const {
    auto dec = std::span<const double>(decoder_);
    return {dec.subspan(0, kDec1W), dec.subspan(kDec1W, kDec1Out),
            dec.subspan(kDec1W + kDec1Out, kDec2W),
            dec.subspan(kDec1W + kDec1Out + kDec2W, kDec2Out)};
  }

  void run_forward(const Tensor3& image, Workspace& ws) const {
    if (image.channels != kInputChannels) {
      fail(ErrorCode::DimensionMismatch,
           "expected " + std::to_string(kInputChannels) + "-channel input, got " +
               std::to_string(image.channels));
    }
    if (image.height % 4 != 0 || image.width % 4 != 0) {
      fail(ErrorCode::DimensionMismatch, "input sides must be multiples of 4, got " +
                                             std::to_string(image.width) + "x" +
                                             std::to_string(image.height));
    }
    auto enc = encoder_view();
    auto dec = decoder_view();
    ws.enc1_pre = nn::conv3x3_forward(image, enc.w1, enc.b1, kEnc1Out, 2);
    ws.enc1_post = nn::relu_forward(ws.enc1_pre);
    ws.enc2_pre = nn::conv3x3_forward(ws.enc1_post, enc.w2, enc.b2, kEnc2Out, 2);
    ws.enc2_post = nn::relu_forward(ws.enc2_pre);
    ws.up1 = nn::upsample2_nearest_forward(ws.enc2_post);
    ws.dec1_pre = nn::conv3x3_forward(ws.up1, dec.w1, dec.b1, kDec1Out, 1);
    ws.dec1_post = nn::relu_forward(ws.dec1_pre);
    ws.up2 = nn::upsample2_nearest_forward(ws.dec1_post);
    ws.dec2_pre = nn::conv3x3_forward(ws.up2, dec.w2, dec.b2, kDec2Out, 1);
    ws.sig = nn::sigmoid_forward(ws.dec2_pre);
  }

  std::vector<double> encoder_;
  std::vector<double> decoder_;
};

// ---------------------------------------------------------------------------
// TTR loss
// ---------------------------------------------------------------------------

struct SupervisionEntry {
  double sfm_depth = 0.0;
  double nn_depth = 0.0;
  double reproj_error = 0.0;
};

/// Weighted L1 alignment loss: mean over entries of
/// exp(-reproj_error^2) * |scale * sfm - nn|.
inline double ttr_loss(double scale, const std::vector<SupervisionEntry>& entries) {
  if (entries.empty()) fail(ErrorCode::EmptyInliers, "ttr_loss: no supervision entries");
  double total = 0.0;
  for (const auto& e : entries) {
    const double w = std::exp(-e.reproj_error * e.reproj_error);
    total += w * std::abs(scale * e.sfm_depth - e.nn_depth);
  }
  return total / static_cast<double>(entries.size());
}

/// The stage-2 inliers of one frame, prepared for refinement: pixels to
/// sample, scaled supervision targets, and reliability weights.
struct FrameSupervision {
  double scale = 0.0;
  std::vector<Eigen::Vector2d> pixels;
  std::vector<double> sfm_depths;
  std::vector<double> weights;  // exp(-reproj_error^2)

  std::size_t size() const { return pixels.size(); }
};

inline FrameSupervision make_frame_supervision(const SparseDepthFrame& frame,
                                               const ScaleAlignment& alignment) {
  FrameSupervision sup;
  sup.scale = alignment.scale;
  sup.pixels.reserve(alignment.stage2_inliers.size());
  for (int index : alignment.stage2_inliers) {
    const auto& e = frame.entries.at(static_cast<std::size_t>(index));
    sup.pixels.push_back(e.pixel);
    sup.sfm_depths.push_back(e.sfm_depth);
    sup.weights.push_back(std::exp(-e.reproj_error * e.reproj_error));
  }
  return sup;
}

/// Evaluates the TTR loss on a predicted map, sampling each supervision pixel
/// bilinearly, and scatters the loss adjoint back onto the map. The bilinear
/// sampler sits inside the differentiation path; the L1 subgradient at zero
/// residual is 0.
inline double supervised_loss_and_adjoint(const DepthMap& pred, const FrameSupervision& sup,
                                          std::vector<double>* adjoint_out) {
  if (sup.size() == 0) fail(ErrorCode::EmptyInliers, "no supervision for frame");
  const double n = static_cast<double>(sup.size());
  if (adjoint_out != nullptr) {
    adjoint_out->assign(pred.size(), 0.0);
  }

  double total = 0.0;
  for (std::size_t l = 0; l < sup.size(); ++l) {
    const double x = sup.pixels[l].x();
    const double y = sup.pixels[l].y();
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, pred.width() - 1);
    const int y1 = std::min(y0 + 1, pred.height() - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double weights[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy,
                               fx * fy};
    const int xs[4] = {x0, x1, x0, x1};
    const int ys[4] = {y0, y0, y1, y1};

    double nn = 0.0;
    for (int i = 0; i < 4; ++i) nn += weights[i] * pred.at(xs[i], ys[i]);

    const double residual = sup.scale * sup.sfm_depths[l] - nn;
    total += sup.weights[l] * std::abs(residual);
    if (adjoint_out != nullptr && residual != 0.0) {
      // d|r|/dnn = -sign(r); spread over the bilinear footprint.
      const double g = -(sup.weights[l] / n) * (residual > 0.0 ? 1.0 : -1.0);
      for (int i = 0; i < 4; ++i) {
        (*adjoint_out)[pred.index(xs[i], ys[i])] += g * weights[i];
      }
    }
  }
  return total / n;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  explicit AdamState(std::size_t dim = 0) : m(dim, 0.0), v(dim, 0.0) {}
};

/// Standard Adam update with bias correction; increments the timestep.
inline void adam_step(std::vector<double>& params, const std::vector<double>& gradient,
                      AdamState& state, const AdamConfig& config) {
  if (params.size() != gradient.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    fail(ErrorCode::DimensionMismatch,
         "adam_step: params " + std::to_string(params.size()) + ", gradient " +
             std::to_string(gradient.size()) + ", state " + std::to_string(state.m.size()));
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Refinement loop
// ---------------------------------------------------------------------------

enum class TtrMode { kEncoderOnly, kFullModel };

struct TtrConfig {
  double learning_rate = 1e-4;
  int steps = 200;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  TtrMode mode = TtrMode::kEncoderOnly;
  std::uint64_t sampling_seed = 0;
};

/// One usable sequence element: the input image and its prepared supervision.
struct RefinementFrame {
  int image_id = 0;
  Tensor3 image;
  FrameSupervision supervision;
};

struct LossTraceEntry {
  int step = 0;
  int image_id = 0;
  double loss = 0.0;
};

/// Refines one shared model over the whole sequence: each step samples one
/// frame uniformly (seeded, with replacement), runs a forward pass, evaluates
/// the weighted L1 loss on the frame's stage-2 inliers, and applies one Adam
/// update to the encoder (or to all parameters in full-model mode). Returns
/// the per-step loss trace; the model is refined in place.
inline std::vector<LossTraceEntry> refine(DepthModel& model,
                                          const std::vector<RefinementFrame>& frames,
                                          const TtrConfig& config) {
  if (frames.empty()) {
    fail(ErrorCode::NoUsableFrames, "refine: no frames with accepted alignments");
  }
  const AdamConfig adam{config.learning_rate, config.adam_beta1, config.adam_beta2,
                        config.adam_epsilon};
  AdamState encoder_state(model.encoder_params().size());
  AdamState decoder_state(model.decoder_params().size());

  Rng rng(config.sampling_seed);
  std::vector<LossTraceEntry> trace;
  trace.reserve(static_cast<std::size_t>(std::max(config.steps, 0)));

  std::vector<double> adjoint;
  std::vector<double> grad_encoder;
  std::vector<double> grad_decoder;
  for (int step = 1; step <= config.steps; ++step) {
    const auto& frame = frames[rng.uniform_index(frames.size())];
    const DepthMap pred = model.forward(frame.image);
    const double loss = supervised_loss_and_adjoint(pred, frame.supervision, &adjoint);

    if (config.mode == TtrMode::kEncoderOnly) {
      model.gradient(frame.image, adjoint, &grad_encoder, nullptr);
      adam_step(model.encoder_params(), grad_encoder, encoder_state, adam);
    } else {
      model.gradient(frame.image, adjoint, &grad_encoder, &grad_decoder);
      adam_step(model.encoder_params(), grad_encoder, encoder_state, adam);
      adam_step(model.decoder_params(), grad_decoder, decoder_state, adam);
    }
    trace.push_back({step, frame.image_id, loss});
  }
  return trace;
}

/// Dense least-squares fit of the model to target depth maps; used to install
/// a known depth estimate (including deliberate corruption) into a fresh
/// model before refinement experiments. Updates all parameters with a
/// linearly decaying learning rate so the fit settles instead of dithering at
/// the Adam step size. Returns the per-step mean absolute error.
struct FitConfig {
  int steps = 800;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

inline std::vector<double> fit_to_depth_maps(DepthModel& model,
                                             const std::vector<Tensor3>& images,
                                             const std::vector<DepthMap>& targets,
                                             const FitConfig& config) {
  if (images.empty() || images.size() != targets.size()) {
    fail(ErrorCode::DimensionMismatch, "fit_to_depth_maps: images/targets mismatch");
  }
  AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8};
  AdamState encoder_state(model.encoder_params().size());
  AdamState decoder_state(model.decoder_params().size());

  Rng rng(config.seed);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(std::max(config.steps, 0)));
  std::vector<double> adjoint;
  std::vector<double> grad_encoder;
  std::vector<double> grad_decoder;
  for (int step = 0; step < config.steps; ++step) {
    const std::size_t j = rng.uniform_index(images.size());
    const DepthMap pred = model.forward(images[j]);
    const DepthMap& target = targets[j];
    if (pred.width() != target.width() || pred.height() != target.height()) {
      fail(ErrorCode::ShapeMismatch, "fit_to_depth_maps: target resolution mismatch");
    }

    adjoint.assign(pred.size(), 0.0);
    double abs_err = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < pred.height(); ++y) {
      for (int x = 0; x < pred.width(); ++x) {
        if (!target.valid(x, y)) continue;
        ++count;
        const double r = pred.at(x, y) - target.at(x, y);
        abs_err += std::abs(r);
        adjoint[pred.index(x, y)] = 2.0 * r;
      }
    }
    if (count == 0) fail(ErrorCode::EmptyMask, "fit_to_depth_maps: target has no valid pixels");
    abs_err /= static_cast<double>(count);
    for (double& a : adjoint) a /= static_cast<double>(count);

    adam.learning_rate =
        config.learning_rate * (1.0 - 0.95 * step / std::max(config.steps, 1));
    model.gradient(images[j], adjoint, &grad_encoder, &grad_decoder);
    adam_step(model.encoder_params(), grad_encoder, encoder_state, adam);
    adam_step(model.decoder_params(), grad_decoder, decoder_state, adam);
    losses.push_back(abs_err);
  }
  return losses;
}

// ---------------------------------------------------------------------------
// Parameter container I/O
// ---------------------------------------------------------------------------

// Flat binary container: magic "SFTR", u32 version, u32 section count, then
// per section { u32 name length, name bytes, u64 element count, f64 values }.
// All integers and doubles little-endian.
inline constexpr std::uint32_t kModelFileVersion = 1;

inline void write_model_params(const DepthModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  auto put = [&out](auto value) {
    const auto le = detail::from_little_endian(value);
    out.write(reinterpret_cast<const char*>(&le), sizeof(le));
  };
  auto put_section = [&](const std::string& name, const std::vector<double>& values) {
    put(static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(static_cast<std::uint64_t>(values.size()));
    for (double v : values) put(v);
  };

  out.write("SFTR", 4);
  put(kModelFileVersion);
  put(static_cast<std::uint32_t>(2));
  put_section("encoder", model.encoder_params());
  put_section("decoder", model.decoder_params());
  if (!out.good()) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

inline void read_model_params(DepthModel& model, const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader reader(bytes, path.filename().string());
  char magic[4];
  for (char& c : magic) c = static_cast<char>(reader.read<std::uint8_t>());
  if (std::memcmp(magic, "SFTR", 4) != 0) {
    fail(ErrorCode::MalformedLine, path.filename().string() + ": bad magic");
  }
  const auto version = reader.read<std::uint32_t>();
  if (version != kModelFileVersion) {
    fail(ErrorCode::MalformedLine, path.filename().string() + ": unsupported version " +
                                       std::to_string(version));
  }
  const auto section_count = reader.read<std::uint32_t>();
  for (std::uint32_t s = 0; s < section_count; ++s) {
    const auto name_len = reader.read<std::uint32_t>();
    std::string name(name_len, '\0');
    for (auto& c : name) c = static_cast<char>(reader.read<std::uint8_t>());
    const auto count = reader.read<std::uint64_t>();
    std::vector<double> values(count);
    for (auto& v : values) v = reader.read<double>();

    std::vector<double>* target = nullptr;
    if (name == "encoder") target = &model.encoder_params();
    if (name == "decoder") target = &model.decoder_params();
    if (target == nullptr) continue;  // unknown sections are skipped
    if (target->size() != values.size()) {
      fail(ErrorCode::DimensionMismatch,
           path.filename().string() + ": section '" + name + "' has " +
               std::to_string(values.size()) + " values, model expects " +
               std::to_string(target->size()));
    }
    *target = std::move(values);
  }
}

inline void write_loss_trace_csv(const std::vector<LossTraceEntry>& trace,
                                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << "step,image_id,loss\n";
  for (const auto& entry : trace) {
    out << entry.step << "," << entry.image_id << "," << detail::format_double(entry.loss)
        << "\n";
  }
  if (!out.good()) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace sfmttr
