// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "splatprune/error.hpp"
#include "splatprune/splat_io.hpp"
#include "support/fixtures.hpp"

using namespace splatprune;
using namespace splatprune::testing;

namespace {

std::span<const std::byte> payload_of(const std::vector<std::byte>& file) {
  const std::string marker = "end_header\n";
  const auto* begin = reinterpret_cast<const char*>(file.data());
  const std::string_view view(begin, file.size());
  const std::size_t at = view.find(marker);
  REQUIRE(at != std::string_view::npos);
  return std::span<const std::byte>(file).subspan(at + marker.size());
}

bool same_bytes(std::span<const std::byte> a, std::span<const std::byte> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size()) == 0;
}

ErrorCode code_of(const std::vector<std::byte>& bytes) {
  try {
    load_ply(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("load_ply accepted the input");
  return ErrorCode::kInvalidConfig;
}

}  // namespace

TEST_SUITE("splat_io") {

TEST_CASE("SH degree is inferred from the f_rest count") {
  Rng rng(3);
  for (int degree = 0; degree <= 3; ++degree) {
    const auto scene = load_ply(random_ply(rng, standard_props(degree), 4));
    CHECK(scene.sh_degree() == degree);
    CHECK(scene[0].sh_rest.size() == 3 * sh_rest_per_channel(degree));
  }
  CHECK(3 * sh_rest_per_channel(3) == 45);
}

TEST_CASE("missing opacity is reported by name") {
  auto props = standard_props(0);
  props.erase(std::remove_if(props.begin(), props.end(),
                             [](const PropSpec& p) { return p.name == "opacity"; }),
              props.end());
  Rng rng(1);
  try {
    load_ply(random_ply(rng, props, 2));
    FAIL("expected MissingProperty");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingProperty);
    CHECK(e.detail() == "opacity");
  }
}

TEST_CASE("ascii, big-endian and truncated inputs are rejected") {
  const auto props = standard_props(0);
  CHECK(code_of(to_bytes(ply_header(props, 1, "ascii 1.0"))) == ErrorCode::kUnsupportedFormat);
  CHECK(code_of(to_bytes(ply_header(props, 1, "binary_big_endian 1.0"))) ==
        ErrorCode::kUnsupportedFormat);

  Rng rng(2);
  auto bytes = random_ply(rng, props, 3);
  bytes.pop_back();
  CHECK(code_of(bytes) == ErrorCode::kTruncatedPayload);
  bytes.push_back(std::byte{0});
  bytes.push_back(std::byte{0});
  CHECK(code_of(bytes) == ErrorCode::kTruncatedPayload);
  CHECK(code_of(to_bytes("not a ply\n")) == ErrorCode::kUnsupportedFormat);
}

TEST_CASE("odd f_rest counts and list properties are unsupported") {
  auto props = standard_props(0);
  props.push_back({"float", "f_rest_0"});
  Rng rng(5);
  CHECK(code_of(random_ply(rng, props, 1)) == ErrorCode::kUnsupportedFormat);

  std::string header = ply_header(standard_props(0), 1);
  header.insert(header.find("end_header"), "property list uchar int vertex_indices\n");
  CHECK(code_of(to_bytes(header)) == ErrorCode::kUnsupportedFormat);
}

TEST_CASE("zero vertices is an empty scene") {
  CHECK(code_of(to_bytes(ply_header(standard_props(0), 0))) == ErrorCode::kEmptyScene);
}

TEST_CASE("two-splat file round-trips its payload bytes") {
  Rng rng(11);
  const auto file = random_ply(rng, standard_props(3), 2);
  const auto scene = load_ply(file);
  const auto saved = save_ply(scene);
  CHECK(same_bytes(payload_of(saved), payload_of(file)));
}

TEST_CASE("normals are optional and extra properties survive a round trip") {
  Rng rng(12);
  auto props = standard_props(1, false);
  props.insert(props.begin() + 2, {"uchar", "red"});
  props.push_back({"double", "confidence"});
  props.push_back({"short", "label"});
  const auto file = random_ply(rng, props, 5, {"comment made by a test", "obj_info unit=m"});
  const auto scene = load_ply(file);
  const auto saved = save_ply(scene);
  CHECK(same_bytes(payload_of(saved), payload_of(file)));
  const std::string header(reinterpret_cast<const char*>(saved.data()),
                           saved.size() - payload_of(saved).size());
  CHECK(header.find("comment made by a test") != std::string::npos);
  CHECK(header.find("obj_info unit=m") != std::string::npos);
  CHECK(header.find("property uchar red") < header.find("property float z"));
}

TEST_CASE("header reports the element count") {
  const auto scene = random_scene(4, 10);
  const auto bytes = save_ply(scene);
  const std::string text(reinterpret_cast<const char*>(bytes.data()), 200);
  CHECK(text.find("element vertex 10\n") != std::string::npos);
}

TEST_CASE("load-save-load equals load on fuzzed files") {
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const int degree = static_cast<int>(rng.index(4));
    const auto file = random_ply(rng, standard_props(degree, rng.index(2) == 0), 1 + rng.index(20));
    const auto once = load_ply(file);
    const auto twice = load_ply(save_ply(once));
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(once[i].position == twice[i].position);
      CHECK(once[i].rotation.coeffs() == twice[i].rotation.coeffs());
      CHECK(once[i].sh_rest == twice[i].sh_rest);
      CHECK(once[i].opacity_logit == twice[i].opacity_logit);
    }
  }
}

TEST_CASE("a subset keeps the survivors' original bytes in order") {
  Rng rng(21);
  const auto file = random_ply(rng, standard_props(2), 10);
  const auto scene = load_ply(file);
  const std::vector<std::size_t> keep = {0, 1, 3, 4, 6, 8, 9};
  const auto saved = save_ply(scene.subset(keep));
  const auto original = payload_of(file);
  const std::size_t stride = original.size() / 10;
  std::vector<std::byte> expected;
  for (std::size_t id : keep) {
    const auto rec = original.subspan(id * stride, stride);
    expected.insert(expected.end(), rec.begin(), rec.end());
  }
  CHECK(same_bytes(payload_of(saved), expected));
}

TEST_CASE("saving an empty subset is an error") {
  const auto scene = random_scene(1, 3);
  CHECK_THROWS_AS(save_ply(scene.subset({})), Error);
}

TEST_CASE("rotations are normalized and preserve the matrix") {
  Rng rng(8);
  auto props = standard_props(0);
  const auto file = random_ply(rng, props, 30);
  const auto scene = load_ply(file);
  const auto payload = payload_of(file);
  const std::size_t stride = payload.size() / 30;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    CHECK(std::abs(scene[i].rotation.norm() - 1.0) < 1e-6);
    float q[4];
    std::memcpy(q, payload.data() + i * stride + stride - 16, 16);
    const Eigen::Quaterniond raw(q[0], q[1], q[2], q[3]);
    const double n2 = raw.squaredNorm();
    // Homogeneous products of an unnormalized q give |q|^2 times the rotation.
    Eigen::Matrix3d from_products;
    const double w = raw.w(), x = raw.x(), y = raw.y(), z = raw.z();
    from_products << w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z;
    CHECK((rotation_matrix(scene[i]) - from_products / n2).norm() < 1e-6);
  }
}

TEST_CASE("opacity activation") {
  GaussianSplat s;
  s.opacity_logit = 0.0;
  CHECK(opacity_linear(s) == 0.5);
  s.opacity_logit = 50.0;
  CHECK(std::abs(opacity_linear(s) - 1.0) < 1e-12);
  s.opacity_logit = -2.1972;
  CHECK(std::abs(opacity_linear(s) - 0.1) < 1e-4);
  s.opacity_logit = -800.0;
  CHECK(opacity_linear(s) >= 0.0);
  CHECK(std::isfinite(opacity_linear(s)));
}

TEST_CASE("covariance of axis-aligned splats") {
  GaussianSplat s;
  CHECK((covariance(s) - Eigen::Matrix3d::Identity()).norm() < 1e-15);
  s.scale_log = Vec3(std::log(2.0), 0.0, 0.0);
  CHECK((covariance(s) - Eigen::Vector3d(4, 1, 1).asDiagonal().toDenseMatrix()).norm() < 1e-12);
}

TEST_CASE("covariance eigenvalues are the squared scales") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    GaussianSplat s = random_splat(rng, 0);
    const Mat3 cov = covariance(s);
    CHECK((cov - cov.transpose()).norm() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    std::array<double, 3> want = {std::exp(2 * s.scale_log[0]), std::exp(2 * s.scale_log[1]),
                                  std::exp(2 * s.scale_log[2])};
    std::sort(want.begin(), want.end());
    for (int k = 0; k < 3; ++k) CHECK(std::abs(eig.eigenvalues()[k] - want[k]) < 1e-9);
    const Mat3 rebuilt = eig.eigenvectors() * eig.eigenvalues().asDiagonal() *
                         eig.eigenvectors().transpose();
    CHECK((rebuilt - cov).norm() < 1e-9);
  }
}

TEST_CASE("from_splats re-decodes through float32") {
  Rng rng(2);
  std::vector<GaussianSplat> splats = {random_splat(rng, 1), random_splat(rng, 1)};
  const auto scene = SplatScene::from_splats(splats, 1);
  CHECK(scene[0].position[0] == static_cast<double>(static_cast<float>(splats[0].position[0])));
  const auto reloaded = load_ply(save_ply(scene));
  CHECK(reloaded[1].sh_rest == scene[1].sh_rest);
  CHECK(reloaded[1].scale_log == scene[1].scale_log);
}

TEST_CASE("files on disk") {
  TempDir dir("io");
  const auto scene = random_scene(9, 12, 2);
  save_ply_file(scene, dir / "a.ply");
  const auto back = load_ply_file(dir / "a.ply");
  CHECK(same_bytes(back.payload(), scene.payload()));
  CHECK_THROWS_AS(load_ply_file(dir / "missing.ply"), std::ios_base::failure);
}

}  // TEST_SUITE
