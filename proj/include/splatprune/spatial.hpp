// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "splatprune/splat_io.hpp"

namespace splatprune {

inline constexpr double kDefaultVoxelFrac = 0.015;
inline constexpr std::size_t kDefaultKNeighbors = 16;
inline constexpr std::size_t kDefaultInterpM = 4;

struct BoundingBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  double diagonal() const { return (max - min).norm(); }
};

/// Tight axis-aligned box. Throws EmptyScene on empty input.
BoundingBox bbox(std::span<const Vec3> points);
BoundingBox bbox(const SplatScene& scene);

/// Principal-axes frame of a point set: origin at the centroid, rows of
/// `axes` ordered by decreasing variance. The first two axes point towards
/// positive third moment and the third completes a right-handed basis, so the
/// frame moves rigidly with the points.
struct SceneFrame {
  Vec3 origin = Vec3::Zero();
  Mat3 axes = Mat3::Identity();

  Vec3 to_local(const Vec3& p) const { return axes * (p - origin); }
};

SceneFrame principal_frame(std::span<const Vec3> points);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

inline constexpr std::size_t kNoExclusion = std::numeric_limits<std::size_t>::max();

/// Exact k-nearest-neighbor index over a fixed 3-D point set. Results are
/// ordered by (distance, index), so ties resolve towards the lower index.
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points);

  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<Vec3>& points() const noexcept { return points_; }

  /// k nearest points to `query`, skipping `exclude` (self-exclusion by
  /// index). Throws KTooLarge when fewer than k candidates exist.
  std::vector<Neighbor> nearest(const Vec3& query, std::size_t k,
                                std::size_t exclude = kNoExclusion) const;

 private:
  struct Node {
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int dim = -1;  // -1 marks a leaf
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t lo, std::uint32_t hi);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Convenience wrapper over a throwaway KdTree.
std::vector<Neighbor> knn(std::span<const Vec3> points, const Vec3& query, std::size_t k,
                          std::size_t exclude = kNoExclusion);

struct Voxel {
  Vec3 centroid = Vec3::Zero();
  double mean_opacity = 0.0;
  Vec3 mean_sh_dc = Vec3::Zero();
  std::vector<double> mean_power_spectrum;
  std::size_t member_count = 0;
  std::vector<std::size_t> member_ids;
};

struct InterpWeight {
  std::uint32_t voxel = 0;
  double weight = 0.0;
};

struct VoxelMapping {
  double voxel_size = 1.0;
  /// Diagonal of the principal-frame box; the scene length scale.
  double scene_diagonal = 0.0;
  SceneFrame frame;
  std::vector<Voxel> voxels;
  std::vector<std::uint32_t> splat_to_voxel;
  // CSR layout: splat i owns interp[interp_offsets[i] .. interp_offsets[i+1]).
  std::vector<std::size_t> interp_offsets;
  std::vector<InterpWeight> interp;

  std::size_t voxel_count() const noexcept { return voxels.size(); }
  std::size_t splat_count() const noexcept { return splat_to_voxel.size(); }
  std::span<const InterpWeight> weights(std::size_t splat) const {
    return std::span<const InterpWeight>(interp).subspan(
        interp_offsets[splat], interp_offsets[splat + 1] - interp_offsets[splat]);
  }
  std::vector<Vec3> centroids() const;
};

/// Grid cells are laid out in the principal frame, anchored at the frame's
/// box minimum, with edge voxel_frac * diagonal (1.0 when the diagonal is 0).
/// Voxels are numbered by their lowest member index.
VoxelMapping voxel_downsample(const SplatScene& scene, double voxel_frac,
                              std::size_t interp_m = kDefaultInterpM);

/// value_i = sum_j w_ij * v_j over splat i's inverse-distance weights.
std::vector<double> interpolate_to_splats(std::span<const double> voxel_values,
                                          const VoxelMapping& mapping);

/// k nearest voxel representatives of every voxel (self excluded). k is
/// clamped to voxel_count - 1.
std::vector<std::vector<Neighbor>> voxel_neighborhoods(const VoxelMapping& mapping,
                                                       std::size_t k);

}  // namespace splatprune
