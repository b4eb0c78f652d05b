// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace splatprune {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Number of higher-order SH coefficients per color channel for degree L.
constexpr std::size_t sh_rest_per_channel(int degree) {
  return static_cast<std::size_t>((degree + 1) * (degree + 1) - 1);
}

/// One Gaussian primitive in its stored parameterization. Values are decoded
/// from the file; the rotation is normalized at load time.
struct GaussianSplat {
  Vec3 position = Vec3::Zero();
  Vec3 scale_log = Vec3::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  double opacity_logit = 0.0;
  Vec3 sh_dc = Vec3::Zero();
  // Channel-major: sh_rest[c * K + (j - 1)] for channel c, coefficient j >= 1.
  std::vector<double> sh_rest;
};

enum class ScalarType : std::uint8_t {
  kInt8,
  kUInt8,
  kInt16,
  kUInt16,
  kInt32,
  kUInt32,
  kFloat32,
  kFloat64,
};

std::size_t scalar_size(ScalarType type);

struct PlyProperty {
  std::string name;
  ScalarType type = ScalarType::kFloat32;
  std::size_t offset = 0;
};

/// Vertex record layout plus the header lines that are carried through a
/// load/save cycle untouched.
struct PlyLayout {
  std::vector<PlyProperty> properties;
  std::vector<std::string> comments;
  std::size_t stride = 0;

  const PlyProperty* find(std::string_view name) const;
};

/// The reference exporter layout for SH degree L with normals:
/// x y z nx ny nz f_dc_0..2 f_rest_* opacity scale_0..2 rot_0..3.
PlyLayout default_layout(int sh_degree);

/// An ordered, immutable collection of splats. The raw vertex records are
/// kept alongside the decoded values so that any subset can be written back
/// bit-exactly.
class SplatScene {
 public:
  /// Encodes `splats` with `default_layout(sh_degree)`. The decoded view is
  /// re-derived from the encoded records so in-memory and on-disk scenes agree.
  static SplatScene from_splats(const std::vector<GaussianSplat>& splats, int sh_degree);

  /// Takes ownership of an already-validated layout and payload.
  static SplatScene from_records(PlyLayout layout, std::vector<std::byte> payload,
                                 std::size_t count);

  std::size_t size() const noexcept { return splats_.size(); }
  bool empty() const noexcept { return splats_.empty(); }
  int sh_degree() const noexcept { return sh_degree_; }
  const std::vector<GaussianSplat>& splats() const noexcept { return splats_; }
  const GaussianSplat& operator[](std::size_t i) const { return splats_[i]; }
  const PlyLayout& layout() const noexcept { return layout_; }
  std::span<const std::byte> payload() const noexcept { return payload_; }
  std::span<const std::byte> record(std::size_t i) const;

  std::vector<Vec3> positions() const;

  /// Survivors in the order given by `ids` (callers pass ascending ids).
  SplatScene subset(std::span<const std::size_t> ids) const;

 private:
  SplatScene() = default;

  PlyLayout layout_;
  std::vector<std::byte> payload_;
  std::vector<GaussianSplat> splats_;
  int sh_degree_ = 0;
};

SplatScene load_ply(std::span<const std::byte> bytes);
SplatScene load_ply_file(const std::filesystem::path& path);
std::vector<std::byte> save_ply(const SplatScene& scene);
void save_ply_file(const SplatScene& scene, const std::filesystem::path& path);

double sigmoid(double x);
double opacity_linear(const GaussianSplat& splat);
Mat3 rotation_matrix(const GaussianSplat& splat);
/// R * diag(exp(scale_log))^2 * R^T.
Mat3 covariance(const GaussianSplat& splat);

}  // namespace splatprune
