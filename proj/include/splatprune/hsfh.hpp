// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

// Hybrid splat feature histogram: an FPFH block over Darboux-frame angles
// plus spherical-harmonic appearance blocks, computed per voxel
// representative.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "splatprune/spatial.hpp"
#include "splatprune/splat_io.hpp"

namespace splatprune {

inline constexpr std::size_t kAngleBins = 11;
inline constexpr std::size_t kGeometricSize = 3 * kAngleBins;
inline constexpr std::size_t kDefaultAppearanceBins = 16;
inline constexpr std::size_t kViewFeatureSize = 10;
inline constexpr std::size_t kMaxCamerasCounted = 32;

using GeometricHistogram = std::array<double, kGeometricSize>;

/// Raw per-band energy: P_l = sum over m and color channels of c_lm^2.
std::vector<double> sh_band_energies(const GaussianSplat& splat);
/// Band energies scaled to sum to 1, or all zero when the total is < 1e-20.
std::vector<double> sh_power_spectrum(const GaussianSplat& splat);

/// Axis of minimum extent (last axis on exact ties), oriented away from
/// `local_centroid`.
Vec3 splat_normal(const GaussianSplat& splat, const Vec3& local_centroid);

struct DarbouxAngles {
  double alpha = 0.0;
  double sigma = 0.0;
  double theta = 0.0;
};

/// Angles of the target normal in the frame u = n_s, v = d x u, w = u x v.
/// Returns nullopt when d is parallel to n_s; throws DegenerateFrame for
/// coincident points.
std::optional<DarbouxAngles> darboux_angles(const Vec3& p_s, const Vec3& n_s, const Vec3& p_t,
                                            const Vec3& n_t);

struct OrientedPoints {
  std::span<const Vec3> positions;
  std::span<const Vec3> normals;
};

struct PointHistogram {
  GeometricHistogram bins{};
  std::size_t pairs = 0;  // 0 flags an empty neighborhood

  bool empty() const noexcept { return pairs == 0; }
};

std::size_t angle_bin(double value, double lo, double hi);

PointHistogram spfh(const OrientedPoints& points, std::size_t i,
                    std::span<const Neighbor> neighbors);

/// SPFH_i + (1/k) sum_j SPFH_j / max(d_j, eps), renormalized per sub-histogram.
PointHistogram fpfh(const OrientedPoints& points, std::size_t i,
                    std::span<const Neighbor> neighbors, std::span<const PointHistogram> spfh_table,
                    double eps);

/// FPFH for every point given precomputed neighbor lists.
std::vector<PointHistogram> fpfh_all(const OrientedPoints& points,
                                     std::span<const std::vector<Neighbor>> neighbors, double eps);

/// Distances of each neighbor color from the neighborhood mean color.
std::vector<double> color_deviations(std::span<const Vec3> neighbor_colors);

/// Nearest-rank 99th percentile of all neighborhood color deviations.
double deviation_scale(std::span<const std::vector<double>> deviations);

/// Deviations binned uniformly over [0, scale], clamped into the last bin,
/// L1-normalized. Empty input gives the zero vector.
std::vector<double> appearance_histogram(std::span<const double> deviations, double scale,
                                         std::size_t bins = kDefaultAppearanceBins);

struct Camera {
  Vec3 center = Vec3::Zero();
  Vec3 forward = Vec3::UnitZ();
};

/// [min, mean, max] of distance/diagonal, |n . view_dir| and |n . forward|
/// across cameras, then min(count, 32)/32.
std::array<double, kViewFeatureSize> view_features(const Vec3& position, const Vec3& normal,
                                                   std::span<const Camera> cameras,
                                                   double diagonal);

struct HsfhDescriptor {
  GeometricHistogram geometric{};
  std::vector<double> power_spectrum;
  std::vector<double> appearance_hist;
  std::optional<std::array<double, kViewFeatureSize>> view;

  std::vector<double> appearance_components() const;
  std::vector<double> flatten() const;
};

struct DescriptorOptions {
  std::size_t appearance_bins = kDefaultAppearanceBins;
  bool with_view_features = false;
  std::span<const Camera> cameras;
};

struct DescriptorSet {
  std::vector<Vec3> normals;           // per voxel
  std::vector<std::size_t> anchors;    // member splat supplying each normal
  std::vector<HsfhDescriptor> descriptors;
  double appearance_scale = 0.0;
};

/// Per-voxel descriptors over the given voxel neighborhoods. Normals come
/// from each voxel's most opaque member (lowest index on ties).
DescriptorSet compute_descriptors(const SplatScene& scene, const VoxelMapping& mapping,
                                  std::span<const std::vector<Neighbor>> neighborhoods,
                                  const DescriptorOptions& options = {});

}  // namespace splatprune
