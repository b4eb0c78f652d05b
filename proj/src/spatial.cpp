// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "splatprune/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "splatprune/error.hpp"
#include "splatprune/hsfh.hpp"
#include "splatprune/parallel.hpp"

namespace splatprune {

namespace {

constexpr std::uint32_t kLeafSize = 12;

double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

struct Candidate {
  double d2;
  std::uint32_t index;
  bool operator<(const Candidate& o) const {
    return d2 < o.d2 || (d2 == o.d2 && index < o.index);
  }
};

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) + 0x85157AF5ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

BoundingBox bbox(std::span<const Vec3> points) {
  if (points.empty()) throw Error(ErrorCode::kEmptyScene, "bounding box of an empty point set");
  BoundingBox box{points[0], points[0]};
  for (const auto& p : points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

BoundingBox bbox(const SplatScene& scene) {
  const auto pts = scene.positions();
  return bbox(pts);
}

SceneFrame principal_frame(std::span<const Vec3> points) {
  SceneFrame frame;
  if (points.empty()) return frame;
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  frame.origin = sum / static_cast<double>(points.size());
  if (points.size() < 2) return frame;

  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - frame.origin;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  // Eigen sorts eigenvalues ascending.
  Vec3 a0 = solver.eigenvectors().col(2);
  Vec3 a1 = solver.eigenvectors().col(1);
  auto skew = [&](const Vec3& axis) {
    double s = 0.0;
    for (const auto& p : points) {
      const double t = axis.dot(p - frame.origin);
      s += t * t * t;
    }
    return s;
  };
  if (skew(a0) < 0.0) a0 = -a0;
  if (skew(a1) < 0.0) a1 = -a1;
  const Vec3 a2 = a0.cross(a1).normalized();
  frame.axes.row(0) = a0.transpose();
  frame.axes.row(1) = a1.transpose();
  frame.axes.row(2) = a2.transpose();
  return frame;
}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kLengthMismatch, "too many points for the spatial index");
  }
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t lo, std::uint32_t hi) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{lo, hi, -1, -1, -1, 0.0});
  if (hi - lo <= kLeafSize) return id;

  Vec3 mn = points_[order_[lo]];
  Vec3 mx = mn;
  for (std::uint32_t i = lo; i < hi; ++i) {
    mn = mn.cwiseMin(points_[order_[i]]);
    mx = mx.cwiseMax(points_[order_[i]]);
  }
  int dim = 0;
  (mx - mn).maxCoeff(&dim);
  if (mx[dim] == mn[dim]) return id;  // all coincident: keep as a leaf

  const std::uint32_t mid = lo + (hi - lo) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = points_[a][dim];
                     const double cb = points_[b][dim];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_[order_[mid]][dim];
  const std::int32_t left = build(lo, mid);
  const std::int32_t right = build(mid, hi);
  nodes_[id].dim = dim;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<Neighbor> KdTree::nearest(const Vec3& query, std::size_t k,
                                      std::size_t exclude) const {
  const std::size_t available = points_.size() - (exclude < points_.size() ? 1 : 0);
  if (k > available) {
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " exceeds the " +
                                           std::to_string(available) + " available points");
  }
  std::vector<Neighbor> out;
  if (k == 0) return out;

  std::priority_queue<Candidate> heap;  // worst candidate on top
  auto visit = [&](auto&& self, std::int32_t node_id) -> void {
    const Node& node = nodes_[node_id];
    if (node.dim < 0) {
      for (std::uint32_t i = node.lo; i < node.hi; ++i) {
        const std::uint32_t idx = order_[i];
        if (idx == exclude) continue;
        const Candidate c{squared_distance(points_[idx], query), idx};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const double diff = query[node.dim] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    // Equal-distance candidates on the far side can still win on index.
    if (heap.size() < k || diff * diff <= heap.top().d2) self(self, far);
  };
  visit(visit, 0);

  out.resize(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = Neighbor{heap.top().index, std::sqrt(heap.top().d2)};
    heap.pop();
  }
  return out;
}

std::vector<Neighbor> knn(std::span<const Vec3> points, const Vec3& query, std::size_t k,
                          std::size_t exclude) {
  if (k == 0) throw Error(ErrorCode::kKTooLarge, "k must be at least 1");
  KdTree tree(std::vector<Vec3>(points.begin(), points.end()));
  return tree.nearest(query, k, exclude);
}

std::vector<Vec3> VoxelMapping::centroids() const {
  std::vector<Vec3> out;
  out.reserve(voxels.size());
  for (const auto& v : voxels) out.push_back(v.centroid);
  return out;
}

VoxelMapping voxel_downsample(const SplatScene& scene, double voxel_frac, std::size_t interp_m) {
  if (!(voxel_frac > 0.0 && voxel_frac <= 0.1)) {
    throw Error(ErrorCode::kInvalidFraction,
                "voxel_frac must lie in (0, 0.1], got " + std::to_string(voxel_frac));
  }
  if (scene.empty()) throw Error(ErrorCode::kEmptyScene, "cannot voxelize an empty scene");
  if (interp_m == 0) throw Error(ErrorCode::kInvalidConfig, "interp_m must be at least 1");

  const std::vector<Vec3> positions = scene.positions();
  VoxelMapping map;
  map.frame = principal_frame(positions);
  std::vector<Vec3> local(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) local[i] = map.frame.to_local(positions[i]);
  const BoundingBox box = bbox(local);
  map.scene_diagonal = box.diagonal();
  map.voxel_size = map.scene_diagonal > 0.0 ? voxel_frac * map.scene_diagonal : 1.0;

  std::unordered_map<CellKey, std::uint32_t, CellHash> cells;
  cells.reserve(positions.size() / 2 + 1);
  map.splat_to_voxel.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vec3 rel = (local[i] - box.min) / map.voxel_size;
    const CellKey key{static_cast<std::int64_t>(std::floor(rel[0])),
                      static_cast<std::int64_t>(std::floor(rel[1])),
                      static_cast<std::int64_t>(std::floor(rel[2]))};
    auto [it, inserted] = cells.try_emplace(key, static_cast<std::uint32_t>(map.voxels.size()));
    if (inserted) map.voxels.emplace_back();
    map.splat_to_voxel[i] = it->second;
    map.voxels[it->second].member_ids.push_back(i);
  }

  const std::size_t bands = static_cast<std::size_t>(scene.sh_degree()) + 1;
  parallel_for(map.voxels.size(), [&](std::size_t v) {
    Voxel& voxel = map.voxels[v];
    voxel.member_count = voxel.member_ids.size();
    voxel.mean_power_spectrum.assign(bands, 0.0);
    Vec3 c = Vec3::Zero();
    Vec3 dc = Vec3::Zero();
    double op = 0.0;
    for (const std::size_t id : voxel.member_ids) {
      const GaussianSplat& s = scene[id];
      c += s.position;
      dc += s.sh_dc;
      op += opacity_linear(s);
      const auto ps = sh_power_spectrum(s);
      for (std::size_t b = 0; b < bands; ++b) voxel.mean_power_spectrum[b] += ps[b];
    }
    const double inv = 1.0 / static_cast<double>(voxel.member_count);
    voxel.centroid = c * inv;
    voxel.mean_sh_dc = dc * inv;
    voxel.mean_opacity = op * inv;
    for (auto& p : voxel.mean_power_spectrum) p *= inv;
  });

  const KdTree tree(map.centroids());
  const std::size_t m = std::min(interp_m, map.voxels.size());
  const double eps = 1e-9 * map.voxel_size;
  map.interp_offsets.resize(positions.size() + 1);
  for (std::size_t i = 0; i <= positions.size(); ++i) map.interp_offsets[i] = i * m;
  map.interp.resize(positions.size() * m);
  parallel_for(positions.size(), [&](std::size_t i) {
    const auto nn = tree.nearest(positions[i], m);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double w = 1.0 / (nn[j].distance + eps);
      map.interp[i * m + j] = InterpWeight{static_cast<std::uint32_t>(nn[j].index), w};
      total += w;
    }
    for (std::size_t j = 0; j < m; ++j) map.interp[i * m + j].weight /= total;
  });
  return map;
}

std::vector<double> interpolate_to_splats(std::span<const double> voxel_values,
                                          const VoxelMapping& mapping) {
  if (voxel_values.size() != mapping.voxel_count()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(voxel_values.size()) + " voxel values for " +
                    std::to_string(mapping.voxel_count()) + " voxels");
  }
  std::vector<double> out(mapping.splat_count());
  parallel_for(out.size(), [&](std::size_t i) {
    double acc = 0.0;
    for (const auto& w : mapping.weights(i)) acc += w.weight * voxel_values[w.voxel];
    out[i] = acc;
  });
  return out;
}

std::vector<std::vector<Neighbor>> voxel_neighborhoods(const VoxelMapping& mapping,
                                                       std::size_t k) {
  const std::size_t count = mapping.voxel_count();
  const std::size_t k_eff = count == 0 ? 0 : std::min(k, count - 1);
  const KdTree tree(mapping.centroids());
  std::vector<std::vector<Neighbor>> out(count);
  parallel_for(count, [&](std::size_t v) {
    out[v] = tree.nearest(mapping.voxels[v].centroid, k_eff, v);
  });
  return out;
}

}  // namespace splatprune
