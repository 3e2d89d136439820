#include <catch2/catch_amalgamated.hpp>

#include "sfmttr/refiner.hpp"
#include "sfmttr/rng.hpp"
#include "test_util.hpp"

using namespace sfmttr;
using test_util::TempDir;

namespace {

Tensor3 random_image(int h, int w, std::uint64_t seed) {
  Tensor3 image(3, h, w);
  Rng rng(seed);
  for (double& v : image.data) v = rng.uniform(-1.0, 1.0);
  return image;
}

FrameSupervision random_supervision(const DepthMap& pred, int count, double scale,
                                    std::uint64_t seed) {
  FrameSupervision sup;
  sup.scale = scale;
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    sup.pixels.emplace_back(rng.uniform(0.5, pred.width() - 1.5),
                            rng.uniform(0.5, pred.height() - 1.5));
    sup.sfm_depths.push_back(rng.uniform(1.0, 20.0));
    sup.weights.push_back(std::exp(-std::pow(rng.uniform(0.0, 1.0), 2)));
  }
  return sup;
}

double loss_of(const DepthModel& model, const Tensor3& image, const FrameSupervision& sup) {
  const DepthMap pred = model.forward(image);
  return supervised_loss_and_adjoint(pred, sup, nullptr);
}

}  // namespace

TEST_CASE("ttr_loss matches hand-evaluated weights", "[refiner]") {
  // r = 0, s = 2, sfm = 10, nn = 21: exp(0) * |20 - 21| / 1 = 1.
  CHECK(ttr_loss(2.0, {{10.0, 21.0, 0.0}}) == Catch::Approx(1.0));
  // Same entry with r = 1: exp(-1) * 1 = 0.36788.
  CHECK(ttr_loss(2.0, {{10.0, 21.0, 1.0}}) == Catch::Approx(0.36788).margin(1e-5));
  // Zero residuals make the loss vanish.
  CHECK(ttr_loss(2.0, {{10.0, 20.0, 0.3}, {4.0, 8.0, 1.0}}) == 0.0);
  CHECK_THROWS_AS(ttr_loss(2.0, {}), Error);
}

TEST_CASE("adam bias correction on the first step", "[refiner]") {
  // g = 1 everywhere, fresh state: m = 0.1, v = 0.001, m_hat = v_hat = 1,
  // update = -lr / (1 + eps).
  std::vector<double> params(4, 2.0);
  std::vector<double> gradient(4, 1.0);
  AdamState state(4);
  AdamConfig config;  // lr 1e-4
  adam_step(params, gradient, state, config);
  CHECK(state.t == 1);
  for (int i = 0; i < 4; ++i) {
    CHECK(state.m[i] == Catch::Approx(0.1));
    CHECK(state.v[i] == Catch::Approx(0.001));
    CHECK(params[i] == Catch::Approx(2.0 - 1e-4 / (1.0 + 1e-8)).margin(1e-12));
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged; calls are deterministic",
          "[refiner]") {
  std::vector<double> params = {1.0, -2.0, 3.0};
  const std::vector<double> zero(3, 0.0);
  AdamState state(3);
  AdamConfig config;
  adam_step(params, zero, state, config);
  CHECK(params == std::vector<double>{1.0, -2.0, 3.0});

  std::vector<double> p1 = {0.5, 0.25, -1.0};
  std::vector<double> p2 = p1;
  std::vector<double> g = {0.1, -0.2, 0.3};
  AdamState s1(3), s2(3);
  adam_step(p1, g, s1, config);
  adam_step(p2, g, s2, config);
  CHECK(p1 == p2);
  CHECK(s1.m == s2.m);
  CHECK(s1.v == s2.v);

  std::vector<double> wrong(2, 0.0);
  CHECK_THROWS_AS(adam_step(params, wrong, state, config), Error);
}

TEST_CASE("reference model outputs stay strictly inside (d_min, d_max)", "[refiner]") {
  for (std::uint64_t seed : {0ull, 5ull, 9ull}) {
    ReferenceModel model(seed);
    const Tensor3 image = random_image(16, 16, seed + 100);
    const DepthMap pred = model.forward(image);
    for (int y = 0; y < pred.height(); ++y) {
      for (int x = 0; x < pred.width(); ++x) {
        CHECK(pred.at(x, y) > ReferenceModel::kDepthMin);
        CHECK(pred.at(x, y) < ReferenceModel::kDepthMax);
      }
    }
  }
}

TEST_CASE("analytic gradients match central finite differences", "[refiner]") {
  ReferenceModel model(42);
  const Tensor3 image = random_image(8, 8, 7);
  const DepthMap pred = model.forward(image);
  const FrameSupervision sup = random_supervision(pred, 5, 1.5, 11);

  std::vector<double> adjoint;
  supervised_loss_and_adjoint(pred, sup, &adjoint);
  std::vector<double> grad_encoder, grad_decoder;
  model.gradient(image, adjoint, &grad_encoder, &grad_decoder);
  REQUIRE(grad_encoder.size() == model.encoder_params().size());
  REQUIRE(grad_decoder.size() == model.decoder_params().size());

  const double h = 1e-3;
  Rng rng(3);
  auto check_block = [&](std::vector<double>& params, const std::vector<double>& grad,
                         std::size_t offset, std::size_t size) {
    for (int probe = 0; probe < 10; ++probe) {
      const std::size_t i = offset + rng.uniform_index(size);
      const double saved = params[i];
      params[i] = saved + h;
      const double up = loss_of(model, image, sup);
      params[i] = saved - h;
      const double down = loss_of(model, image, sup);
      params[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
      CHECK(std::abs(fd - grad[i]) / denom < 1e-4);
    }
  };

  auto& enc = model.encoder_params();
  check_block(enc, grad_encoder, 0, ReferenceModel::kEnc1W);
  check_block(enc, grad_encoder, ReferenceModel::kEnc1W, ReferenceModel::kEnc1Out);
  check_block(enc, grad_encoder, ReferenceModel::kEnc1W + ReferenceModel::kEnc1Out,
              ReferenceModel::kEnc2W);
  auto& dec = model.decoder_params();
  check_block(dec, grad_decoder, 0, ReferenceModel::kDec1W);
  check_block(dec, grad_decoder, ReferenceModel::kDec1W + ReferenceModel::kDec1Out,
              ReferenceModel::kDec2W);
}

TEST_CASE("zero residual supervision gives a zero gradient", "[refiner]") {
  ReferenceModel model(8);
  const Tensor3 image = random_image(8, 8, 9);
  const DepthMap pred = model.forward(image);

  FrameSupervision sup;
  sup.scale = 2.0;
  Rng rng(15);
  for (int i = 0; i < 6; ++i) {
    const Eigen::Vector2d pixel(rng.uniform(0.5, 6.5), rng.uniform(0.5, 6.5));
    const double nn = *sample_depth_map(pred, pixel);
    sup.pixels.push_back(pixel);
    sup.sfm_depths.push_back(nn / sup.scale);  // residual exactly 0
    sup.weights.push_back(1.0);
  }
  std::vector<double> adjoint;
  const double loss = supervised_loss_and_adjoint(pred, sup, &adjoint);
  CHECK(loss == 0.0);
  std::vector<double> grad_encoder, grad_decoder;
  model.gradient(image, adjoint, &grad_encoder, &grad_decoder);
  for (double g : grad_encoder) CHECK(g == 0.0);
  for (double g : grad_decoder) CHECK(g == 0.0);
}

TEST_CASE("encoder-only gradient has encoder length", "[refiner]") {
  ReferenceModel model(4);
  const Tensor3 image = random_image(8, 8, 5);
  const DepthMap pred = model.forward(image);
  const FrameSupervision sup = random_supervision(pred, 4, 1.0, 2);
  std::vector<double> adjoint;
  supervised_loss_and_adjoint(pred, sup, &adjoint);
  const auto grad = model.encoder_gradient(image, adjoint);
  CHECK(grad.size() == static_cast<std::size_t>(ReferenceModel::kEncoderParams));
}

TEST_CASE("refine: zero steps returns the model unchanged", "[refiner]") {
  ReferenceModel model(21);
  const auto encoder_before = model.encoder_params();
  const auto decoder_before = model.decoder_params();

  RefinementFrame frame;
  frame.image_id = 1;
  frame.image = random_image(8, 8, 1);
  frame.supervision = random_supervision(model.forward(frame.image), 5, 1.0, 3);

  TtrConfig config;
  config.steps = 0;
  const auto trace = refine(model, {frame}, config);
  CHECK(trace.empty());
  CHECK(model.encoder_params() == encoder_before);
  CHECK(model.decoder_params() == decoder_before);

  CHECK_THROWS_AS(refine(model, {}, config), Error);
}

TEST_CASE("encoder-only refinement keeps decoder parameters bit-identical", "[refiner]") {
  ReferenceModel model(33);
  RefinementFrame frame;
  frame.image_id = 1;
  frame.image = random_image(8, 8, 2);
  frame.supervision = random_supervision(model.forward(frame.image), 8, 2.0, 4);

  const auto decoder_before = model.decoder_params();
  const auto encoder_before = model.encoder_params();
  TtrConfig config;
  config.steps = 25;
  config.mode = TtrMode::kEncoderOnly;
  const auto trace = refine(model, {frame}, config);
  CHECK(trace.size() == 25);
  CHECK(model.decoder_params() == decoder_before);
  CHECK(model.encoder_params() != encoder_before);
}

TEST_CASE("refinement is deterministic under a fixed sampling seed", "[refiner]") {
  auto run_once = [] {
    ReferenceModel model(55);
    std::vector<RefinementFrame> frames;
    for (int j = 0; j < 3; ++j) {
      RefinementFrame frame;
      frame.image_id = j + 1;
      frame.image = random_image(8, 8, 10 + j);
      frame.supervision =
          random_supervision(model.forward(frame.image), 6, 1.3, 20 + j);
      frames.push_back(std::move(frame));
    }
    TtrConfig config;
    config.steps = 30;
    config.sampling_seed = 77;
    const auto trace = refine(model, frames, config);
    return std::make_pair(trace, model.encoder_params());
  };
  const auto [trace1, enc1] = run_once();
  const auto [trace2, enc2] = run_once();
  REQUIRE(trace1.size() == trace2.size());
  for (std::size_t i = 0; i < trace1.size(); ++i) {
    CHECK(trace1[i].step == trace2[i].step);
    CHECK(trace1[i].image_id == trace2[i].image_id);
    CHECK(trace1[i].loss == trace2[i].loss);
  }
  CHECK(enc1 == enc2);
}

TEST_CASE("refinement reduces the supervised loss", "[refiner]") {
  ReferenceModel model(66);
  RefinementFrame frame;
  frame.image_id = 1;
  frame.image = random_image(12, 12, 6);
  const DepthMap pred = model.forward(frame.image);
  frame.supervision = random_supervision(pred, 20, 1.0, 8);

  TtrConfig config;
  config.steps = 120;
  config.learning_rate = 5e-3;
  const auto trace = refine(model, {frame}, config);
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 20; ++i) early += trace[i].loss;
  for (int i = 0; i < 20; ++i) late += trace[trace.size() - 1 - i].loss;
  CHECK(late < early);
}

TEST_CASE("model parameter container round-trips bit-exactly", "[refiner]") {
  TempDir dir("sftr");
  ReferenceModel model(90);
  const auto path = dir.path / "model.sftr";
  write_model_params(model, path);

  ReferenceModel other(1);  // different init, fully overwritten
  read_model_params(other, path);
  CHECK(other.encoder_params() == model.encoder_params());
  CHECK(other.decoder_params() == model.decoder_params());
}

TEST_CASE("model container rejects wrong section sizes and bad magic", "[refiner]") {
  TempDir dir("sftr_bad");
  const auto bad_size = dir.path / "bad_size.sftr";
  {
    std::string bytes = "SFTR";
    test_util::append_pod(bytes, std::uint32_t{1});  // version
    test_util::append_pod(bytes, std::uint32_t{1});  // sections
    test_util::append_pod(bytes, std::uint32_t{7});
    bytes += "encoder";
    test_util::append_pod(bytes, std::uint64_t{3});
    for (double v : {1.0, 2.0, 3.0}) test_util::append_pod(bytes, v);
    std::ofstream out(bad_size, std::ios::binary);
    out << bytes;
  }
  ReferenceModel model(0);
  try {
    read_model_params(model, bad_size);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }

  const auto bad_magic = dir.path / "bad_magic.sftr";
  {
    std::ofstream out(bad_magic, std::ios::binary);
    out << "NOPE" << std::string(16, '\0');
  }
  CHECK_THROWS_AS(read_model_params(model, bad_magic), Error);
}
