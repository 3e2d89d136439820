#include <cstdint>
#include <filesystem>
#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "sfmttr/colmap_io.hpp"
#include "test_util.hpp"

using namespace sfmttr;
using test_util::append_pod;
using test_util::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected sfmttr::Error");
  return ErrorCode::IoFailure;
}

}  // namespace

TEST_CASE("text camera line parses PINHOLE and SIMPLE_PINHOLE", "[colmap_io]") {
  const auto cameras = parse_cameras(
      "# comment\n"
      "1 PINHOLE 640 480 500 500 320 240\n"
      "2 SIMPLE_PINHOLE 320 240 260 160 120\n",
      ModelFormat::kText);
  REQUIRE(cameras.size() == 2);
  const auto& cam1 = cameras.at(1);
  CHECK(cam1.model == CameraModelId::kPinhole);
  CHECK(cam1.width == 640);
  CHECK(cam1.height == 480);
  CHECK(cam1.fx == 500.0);
  CHECK(cam1.fy == 500.0);
  CHECK(cam1.cx == 320.0);
  CHECK(cam1.cy == 240.0);
  const auto& cam2 = cameras.at(2);
  CHECK(cam2.model == CameraModelId::kSimplePinhole);
  CHECK(cam2.fx == 260.0);
  CHECK(cam2.fy == 260.0);  // single focal expands to fx = fy
}

TEST_CASE("comment-only cameras file parses to an empty map", "[colmap_io]") {
  CHECK(parse_cameras("# only comments\n# nothing else\n", ModelFormat::kText).empty());
  CHECK(parse_cameras("", ModelFormat::kText).empty());
}

TEST_CASE("truncated binary cameras file is rejected", "[colmap_io]") {
  std::string bytes;
  append_pod(bytes, std::uint64_t{1});
  bytes += "0123456789";  // 10 bytes of body, far short of one record
  CHECK(code_of([&] { parse_cameras(bytes, ModelFormat::kBinary); }) ==
        ErrorCode::TruncatedFile);
}

TEST_CASE("unsupported camera models are rejected by name", "[colmap_io]") {
  try {
    parse_cameras("1 RADIAL 640 480 500 320 240 0.1\n", ModelFormat::kText);
    FAIL("expected UnsupportedCameraModel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedCameraModel);
    CHECK(std::string(e.what()).find("RADIAL") != std::string::npos);
  }

  std::string bytes;
  append_pod(bytes, std::uint64_t{1});
  append_pod(bytes, std::int32_t{7});  // camera_id
  append_pod(bytes, std::int32_t{3});  // RADIAL
  append_pod(bytes, std::uint64_t{640});
  append_pod(bytes, std::uint64_t{480});
  try {
    parse_cameras(bytes, ModelFormat::kBinary);
    FAIL("expected UnsupportedCameraModel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedCameraModel);
    CHECK(std::string(e.what()).find("RADIAL") != std::string::npos);
  }
}

TEST_CASE("malformed camera lines carry their line number", "[colmap_io]") {
  try {
    parse_cameras("# header\n1 PINHOLE 640 480 500 nan-ish 320 240\n", ModelFormat::kText);
    FAIL("expected MalformedLine");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedLine);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("image text parsing: identity pose and NULL sentinel", "[colmap_io]") {
  const auto images = parse_images(
      "1 1 0 0 0 0 0 0 1 a.png\n"
      "10.5 20.5 7 30 40 -1\n",
      ModelFormat::kText);
  REQUIRE(images.size() == 1);
  const auto& image = images.at(1);
  CHECK(image.rotation.isApprox(Eigen::Quaterniond::Identity()));
  CHECK(image.translation.isZero());
  // Identity world-to-camera: camera frame equals world frame.
  const Eigen::Matrix3d r = image.rotation.toRotationMatrix();
  CHECK((r - Eigen::Matrix3d::Identity()).norm() < 1e-15);
  REQUIRE(image.observations.size() == 2);
  CHECK(image.observations[0].point3d_id == 7);
  CHECK(image.observations[1].point3d_id == kNoPoint3d);
  CHECK_FALSE(image.observations[1].has_point3d());
}

TEST_CASE("quaternion (0.70710678, 0, 0.70710678, 0) is a 90 degree y-rotation",
          "[colmap_io]") {
  const auto images = parse_images(
      "3 0.70710678 0 0.70710678 0 0 0 0 1 b.png\n"
      "\n",
      ModelFormat::kText);
  const auto& image = images.at(3);
  // Norm deviates from 1 by ~1e-9, well inside the 1e-3 gate; renormalized.
  CHECK(image.rotation.norm() == Catch::Approx(1.0).margin(1e-12));
  const Eigen::Matrix3d r = image.rotation.toRotationMatrix();
  const Eigen::Matrix3d expected =
      Eigen::AngleAxisd(M_PI / 2.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
  CHECK((r - expected).norm() < 1e-8);
}

TEST_CASE("quaternions far from unit norm are rejected", "[colmap_io]") {
  CHECK(code_of([] {
          parse_images("1 1.1 0 0 0 0 0 0 1 a.png\n\n", ModelFormat::kText);
        }) == ErrorCode::NonUnitQuaternion);
}

TEST_CASE("points3D text parsing and error field validation", "[colmap_io]") {
  const auto points = parse_points3d(
      "# header\n"
      "5 1.5 -2 3 10 20 30 0.0 1 0 2 1\n",
      ModelFormat::kText);
  REQUIRE(points.size() == 1);
  const auto& point = points.at(5);
  CHECK(point.position == Eigen::Vector3d(1.5, -2.0, 3.0));
  CHECK(point.reproj_error == 0.0);  // exp(-0^2) = 1 downstream
  REQUIRE(point.track.size() == 2);
  CHECK(point.track[0].image_id == 1);
  CHECK(point.track[0].point2d_idx == 0);
  CHECK(point.track[1].image_id == 2);
  CHECK(point.track[1].point2d_idx == 1);

  CHECK(parse_points3d("# none\n", ModelFormat::kText).empty());
  CHECK(code_of([] {
          parse_points3d("5 1 2 3 0 0 0 -0.5 1 0 2 1\n", ModelFormat::kText);
        }) == ErrorCode::NegativeError);
}

TEST_CASE("binary points record with a two-image track round-trips", "[colmap_io]") {
  std::string bytes;
  append_pod(bytes, std::uint64_t{1});
  append_pod(bytes, std::int64_t{42});
  append_pod(bytes, 1.0);
  append_pod(bytes, 2.0);
  append_pod(bytes, 3.0);
  bytes.push_back(char(10));
  bytes.push_back(char(20));
  bytes.push_back(char(30));
  append_pod(bytes, 0.5);
  append_pod(bytes, std::uint64_t{2});
  append_pod(bytes, std::int32_t{1});
  append_pod(bytes, std::int32_t{0});
  append_pod(bytes, std::int32_t{2});
  append_pod(bytes, std::int32_t{3});
  const auto points = parse_points3d(bytes, ModelFormat::kBinary);
  REQUIRE(points.size() == 1);
  const auto& point = points.at(42);
  CHECK(point.position == Eigen::Vector3d(1.0, 2.0, 3.0));
  CHECK(point.reproj_error == 0.5);
  REQUIRE(point.track.size() == 2);
  CHECK(point.track[1].image_id == 2);
  CHECK(point.track[1].point2d_idx == 3);
}

TEST_CASE("negative binary point3d ids become the NULL sentinel", "[colmap_io]") {
  std::string bytes;
  append_pod(bytes, std::uint64_t{1});
  append_pod(bytes, std::int32_t{1});                     // image_id
  for (double q : {1.0, 0.0, 0.0, 0.0}) append_pod(bytes, q);
  for (double t : {0.0, 0.0, 0.0}) append_pod(bytes, t);
  append_pod(bytes, std::int32_t{1});                     // camera_id
  bytes += "x.png";
  bytes.push_back('\0');
  append_pod(bytes, std::uint64_t{1});
  append_pod(bytes, 5.0);
  append_pod(bytes, 6.0);
  // uint64 max, the invalid-id form some exports use, reads as -1.
  append_pod(bytes, std::uint64_t{0xffffffffffffffffull});
  const auto images = parse_images(bytes, ModelFormat::kBinary);
  CHECK(images.at(1).observations.at(0).point3d_id == kNoPoint3d);
}

TEST_CASE("text round-trip preserves the toy reconstruction", "[colmap_io]") {
  const Reconstruction recon = test_util::make_toy_reconstruction();
  TempDir dir("roundtrip_text");
  write_reconstruction_text(recon, dir.path);
  const Reconstruction reparsed = load_reconstruction(dir.path);
  test_util::check_reconstructions_close(recon, reparsed, 1e-6);
}

TEST_CASE("binary and text writes of one model parse to equal reconstructions",
          "[colmap_io]") {
  const Reconstruction recon = test_util::make_toy_reconstruction();
  TempDir text_dir("agreement_text");
  TempDir bin_dir("agreement_bin");
  write_reconstruction_text(recon, text_dir.path);
  write_reconstruction_binary(recon, bin_dir.path);
  const Reconstruction from_text = load_reconstruction(text_dir.path);
  const Reconstruction from_bin = load_reconstruction(bin_dir.path);
  test_util::check_reconstructions_close(from_text, from_bin, 1e-12);
}

TEST_CASE("empty reconstruction writes three parseable header-only files", "[colmap_io]") {
  TempDir dir("empty");
  write_reconstruction_text(Reconstruction{}, dir.path);
  const Reconstruction reparsed = load_reconstruction(dir.path);
  CHECK(reparsed.cameras.empty());
  CHECK(reparsed.images.empty());
  CHECK(reparsed.points.empty());
}

TEST_CASE("a camera with fx != fy is always written as PINHOLE", "[colmap_io]") {
  Reconstruction recon;
  CameraIntrinsics cam;
  cam.camera_id = 1;
  cam.model = CameraModelId::kSimplePinhole;  // inconsistent with fx != fy
  cam.width = 100;
  cam.height = 100;
  cam.fx = 80.0;
  cam.fy = 81.0;
  cam.cx = 50.0;
  cam.cy = 50.0;
  recon.cameras[1] = cam;
  TempDir dir("fxfy");
  write_reconstruction_text(recon, dir.path);

  std::ifstream in(dir.path / "cameras.txt");
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  CHECK(contents.find(" PINHOLE ") != std::string::npos);
  CHECK(contents.find("SIMPLE_PINHOLE") == std::string::npos);

  const auto cameras =
      parse_cameras(sfmttr::detail::read_file(dir.path / "cameras.txt"), ModelFormat::kText);
  CHECK(cameras.at(1).fx == 80.0);
  CHECK(cameras.at(1).fy == 81.0);
}

TEST_CASE("binary model files are preferred over text", "[colmap_io]") {
  const Reconstruction recon = test_util::make_toy_reconstruction();
  TempDir dir("prefer_bin");
  write_reconstruction_text(recon, dir.path);
  // Overwrite text with a conflicting model in binary form.
  Reconstruction other = recon;
  other.points.at(1).reproj_error = 0.125;
  write_reconstruction_binary(other, dir.path);
  const Reconstruction loaded = load_reconstruction(dir.path);
  CHECK(loaded.points.at(1).reproj_error == 0.125);
}

TEST_CASE("integrity violations name the offending ids", "[colmap_io]") {
  TempDir dir("integrity");
  Reconstruction recon = test_util::make_toy_reconstruction();
  recon.images.at(1).camera_id = 9;  // no such camera
  write_reconstruction_text(recon, dir.path);
  try {
    load_reconstruction(dir.path);
    FAIL("expected IntegrityViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IntegrityViolation);
    CHECK(std::string(e.what()).find("camera_id 9") != std::string::npos);
  }
}

TEST_CASE("dangling track references are integrity violations", "[colmap_io]") {
  TempDir dir("dangling");
  Reconstruction recon = test_util::make_toy_reconstruction();
  recon.points.at(2).track.push_back({5, 0});  // image 5 does not exist
  write_reconstruction_text(recon, dir.path);
  CHECK(code_of([&] { load_reconstruction(dir.path); }) == ErrorCode::IntegrityViolation);
}

TEST_CASE("missing model files are reported", "[colmap_io]") {
  TempDir dir("missing");
  CHECK(code_of([&] { load_reconstruction(dir.path); }) == ErrorCode::MissingFile);
}

TEST_CASE("committed 5-image fixture loads from binary and text identically",
          "[colmap_io][fixture]") {
  const std::filesystem::path fixture =
      std::filesystem::path(SFMTTR_TEST_DIR) / "fixtures" / "colmap_5img";
  const Reconstruction recon = load_reconstruction(fixture / "binary");
  CHECK(recon.images.size() == 5);
  CHECK(recon.cameras.size() == 1);
  CHECK(recon.points.size() >= 100);

  const Reconstruction from_text = load_reconstruction(fixture / "text");
  test_util::check_reconstructions_close(recon, from_text, 1e-6);

  // Round-trip through our own text writer.
  TempDir dir("fixture_rt");
  write_reconstruction_text(recon, dir.path);
  const Reconstruction reparsed = load_reconstruction(dir.path);
  test_util::check_reconstructions_close(recon, reparsed, 1e-6);
}
