// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "splatprune/hsfh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "splatprune/error.hpp"
#include "splatprune/parallel.hpp"

namespace splatprune {

namespace {

int degree_from_rest(std::size_t rest_size) {
  const std::size_t per_channel = rest_size / 3;
  for (int l = 0; l <= 8; ++l) {
    if (sh_rest_per_channel(l) == per_channel) return l;
  }
  throw Error(ErrorCode::kLengthMismatch,
              "sh_rest length " + std::to_string(rest_size) + " matches no SH degree");
}

void normalize_blocks(GeometricHistogram& h) {
  for (std::size_t b = 0; b < 3; ++b) {
    double total = 0.0;
    for (std::size_t k = 0; k < kAngleBins; ++k) total += h[b * kAngleBins + k];
    if (total > 0.0) {
      for (std::size_t k = 0; k < kAngleBins; ++k) h[b * kAngleBins + k] /= total;
    }
  }
}

}  // namespace

std::vector<double> sh_band_energies(const GaussianSplat& splat) {
  const int degree = degree_from_rest(splat.sh_rest.size());
  const std::size_t per_channel = sh_rest_per_channel(degree);
  std::vector<double> energy(static_cast<std::size_t>(degree) + 1, 0.0);
  energy[0] = splat.sh_dc.squaredNorm();
  for (int l = 1; l <= degree; ++l) {
    const std::size_t first = static_cast<std::size_t>(l * l);
    const std::size_t last = static_cast<std::size_t>((l + 1) * (l + 1));
    double e = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t j = first; j < last; ++j) {
        const double v = splat.sh_rest[c * per_channel + (j - 1)];
        e += v * v;
      }
    }
    energy[static_cast<std::size_t>(l)] = e;
  }
  return energy;
}

std::vector<double> sh_power_spectrum(const GaussianSplat& splat) {
  auto p = sh_band_energies(splat);
  double total = 0.0;
  for (double v : p) total += v;
  if (!(total >= 1e-20)) {
    std::fill(p.begin(), p.end(), 0.0);
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

Vec3 splat_normal(const GaussianSplat& splat, const Vec3& local_centroid) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (splat.scale_log[i] <= splat.scale_log[axis]) axis = i;
  }
  Vec3 n = rotation_matrix(splat).col(axis).normalized();
  const double side = n.dot(splat.position - local_centroid);
  if (std::abs(side) <= 1e-12) {
    int dominant = 0;
    for (int i = 1; i < 3; ++i) {
      if (std::abs(n[i]) > std::abs(n[dominant])) dominant = i;
    }
    if (n[dominant] < 0.0) n = -n;
  } else if (side < 0.0) {
    n = -n;
  }
  return n;
}

std::optional<DarbouxAngles> darboux_angles(const Vec3& p_s, const Vec3& n_s, const Vec3& p_t,
                                            const Vec3& n_t) {
  Vec3 d = p_t - p_s;
  const double len = d.norm();
  if (len == 0.0) throw Error(ErrorCode::kDegenerateFrame, "coincident points");
  d /= len;
  const Vec3& u = n_s;
  Vec3 v = d.cross(u);
  const double vn = v.norm();
  if (vn < 1e-9) return std::nullopt;
  v /= vn;
  const Vec3 w = u.cross(v);
  DarbouxAngles a;
  a.alpha = v.dot(n_t);
  a.sigma = u.dot(d);
  a.theta = std::atan2(w.dot(n_t), u.dot(n_t));
  if (a.theta <= -std::numbers::pi) a.theta = std::numbers::pi;
  return a;
}

std::size_t angle_bin(double value, double lo, double hi) {
  const double t = (value - lo) / (hi - lo) * static_cast<double>(kAngleBins);
  if (!(t > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(t), kAngleBins - 1);
}

PointHistogram spfh(const OrientedPoints& points, std::size_t i,
                    std::span<const Neighbor> neighbors) {
  constexpr double kPi = std::numbers::pi;
  PointHistogram h;
  const Vec3& pi = points.positions[i];
  const Vec3& ni = points.normals[i];
  for (const Neighbor& nb : neighbors) {
    const std::size_t j = nb.index;
    const Vec3& pj = points.positions[j];
    const Vec3& nj = points.normals[j];
    const Vec3 line = pj - pi;
    const double len = line.norm();
    if (len == 0.0) continue;
    // The endpoint whose normal is closer to the connecting line is the source.
    const bool swap = std::abs(nj.dot(line)) > std::abs(ni.dot(line));
    const auto angles = swap ? darboux_angles(pj, nj, pi, ni) : darboux_angles(pi, ni, pj, nj);
    if (!angles) continue;
    h.bins[angle_bin(angles->alpha, -1.0, 1.0)] += 1.0;
    h.bins[kAngleBins + angle_bin(angles->sigma, -1.0, 1.0)] += 1.0;
    h.bins[2 * kAngleBins + angle_bin(angles->theta, -kPi, kPi)] += 1.0;
    ++h.pairs;
  }
  normalize_blocks(h.bins);
  return h;
}

PointHistogram fpfh(const OrientedPoints& points, std::size_t i,
                    std::span<const Neighbor> neighbors, std::span<const PointHistogram> spfh_table,
                    double eps) {
  (void)points;
  PointHistogram out = spfh_table[i];
  if (neighbors.empty()) return out;
  const double inv_k = 1.0 / static_cast<double>(neighbors.size());
  std::size_t pairs = out.pairs;
  for (const Neighbor& nb : neighbors) {
    const PointHistogram& other = spfh_table[nb.index];
    const double w = inv_k / std::max(nb.distance, eps);
    for (std::size_t b = 0; b < kGeometricSize; ++b) out.bins[b] += w * other.bins[b];
    pairs += other.pairs;
  }
  out.pairs = pairs;
  normalize_blocks(out.bins);
  return out;
}

std::vector<PointHistogram> fpfh_all(const OrientedPoints& points,
                                     std::span<const std::vector<Neighbor>> neighbors,
                                     double eps) {
  const std::size_t n = points.positions.size();
  if (neighbors.size() != n || points.normals.size() != n) {
    throw Error(ErrorCode::kLengthMismatch, "positions, normals and neighbor lists disagree");
  }
  std::vector<PointHistogram> table(n);
  parallel_for(n, [&](std::size_t i) { table[i] = spfh(points, i, neighbors[i]); });
  std::vector<PointHistogram> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fpfh(points, i, neighbors[i], table, eps); });
  return out;
}

std::vector<double> color_deviations(std::span<const Vec3> neighbor_colors) {
  std::vector<double> out;
  if (neighbor_colors.empty()) return out;
  Vec3 mean = Vec3::Zero();
  for (const auto& c : neighbor_colors) mean += c;
  mean /= static_cast<double>(neighbor_colors.size());
  out.reserve(neighbor_colors.size());
  for (const auto& c : neighbor_colors) out.push_back((c - mean).norm());
  return out;
}

double deviation_scale(std::span<const std::vector<double>> deviations) {
  std::vector<double> all;
  for (const auto& d : deviations) all.insert(all.end(), d.begin(), d.end());
  if (all.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(all.size())));
  const std::size_t k = rank == 0 ? 0 : rank - 1;
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  return all[k];
}

std::vector<double> appearance_histogram(std::span<const double> deviations, double scale,
                                         std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::kInvalidConfig, "appearance_bins must be at least 1");
  std::vector<double> h(bins, 0.0);
  if (deviations.empty()) return h;
  for (double d : deviations) {
    std::size_t b = 0;
    if (scale > 0.0) {
      const double t = d / scale * static_cast<double>(bins);
      b = t > 0.0 ? std::min(static_cast<std::size_t>(t), bins - 1) : 0;
    }
    h[b] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(deviations.size());
  for (double& v : h) v *= inv;
  return h;
}

std::array<double, kViewFeatureSize> view_features(const Vec3& position, const Vec3& normal,
                                                   std::span<const Camera> cameras,
                                                   double diagonal) {
  if (cameras.empty()) throw Error(ErrorCode::kNoCameras, "view features need at least one camera");
  const double scale = diagonal > 0.0 ? diagonal : 1.0;
  std::array<double, 3> lo{}, hi{}, sum{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const Camera& cam : cameras) {
    const Vec3 to_cam = cam.center - position;
    const double dist = to_cam.norm();
    const double facing = dist > 0.0 ? std::abs(normal.dot(to_cam / dist)) : 0.0;
    const double fwd_norm = cam.forward.norm();
    const double aligned = fwd_norm > 0.0 ? std::abs(normal.dot(cam.forward / fwd_norm)) : 0.0;
    const double q[3] = {dist / scale, facing, aligned};
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], q[k]);
      hi[k] = std::max(hi[k], q[k]);
      sum[k] += q[k];
    }
  }
  std::array<double, kViewFeatureSize> f{};
  const double n = static_cast<double>(cameras.size());
  for (int k = 0; k < 3; ++k) {
    f[3 * k] = lo[k];
    f[3 * k + 1] = sum[k] / n;
    f[3 * k + 2] = hi[k];
  }
  f[9] = static_cast<double>(std::min(cameras.size(), kMaxCamerasCounted)) /
         static_cast<double>(kMaxCamerasCounted);
  return f;
}

std::vector<double> HsfhDescriptor::appearance_components() const {
  std::vector<double> out(power_spectrum);
  out.insert(out.end(), appearance_hist.begin(), appearance_hist.end());
  return out;
}

std::vector<double> HsfhDescriptor::flatten() const {
  std::vector<double> out(geometric.begin(), geometric.end());
  out.insert(out.end(), power_spectrum.begin(), power_spectrum.end());
  out.insert(out.end(), appearance_hist.begin(), appearance_hist.end());
  if (view) out.insert(out.end(), view->begin(), view->end());
  return out;
}

DescriptorSet compute_descriptors(const SplatScene& scene, const VoxelMapping& mapping,
                                  std::span<const std::vector<Neighbor>> neighborhoods,
                                  const DescriptorOptions& options) {
  const std::size_t count = mapping.voxel_count();
  if (neighborhoods.size() != count) {
    throw Error(ErrorCode::kLengthMismatch, "one neighborhood per voxel required");
  }
  if (options.with_view_features && options.cameras.empty()) {
    throw Error(ErrorCode::kNoCameras, "view features requested without cameras");
  }

  DescriptorSet set;
  set.normals.resize(count);
  set.anchors.resize(count);
  set.descriptors.resize(count);
  const std::vector<Vec3> centroids = mapping.centroids();

  parallel_for(count, [&](std::size_t v) {
    const Voxel& voxel = mapping.voxels[v];
    std::size_t anchor = voxel.member_ids.front();
    double best = opacity_linear(scene[anchor]);
    for (const std::size_t id : voxel.member_ids) {
      const double op = opacity_linear(scene[id]);
      if (op > best) {
        best = op;
        anchor = id;
      }
    }
    Vec3 local = voxel.centroid;
    for (const Neighbor& nb : neighborhoods[v]) local += centroids[nb.index];
    local /= static_cast<double>(neighborhoods[v].size() + 1);
    set.anchors[v] = anchor;
    set.normals[v] = splat_normal(scene[anchor], local);
  });

  const double eps = 1e-9 * mapping.voxel_size;
  const OrientedPoints units{centroids, set.normals};
  const auto geometric = fpfh_all(units, neighborhoods, eps);

  std::vector<std::vector<double>> deviations(count);
  parallel_for(count, [&](std::size_t v) {
    std::vector<Vec3> colors;
    colors.reserve(neighborhoods[v].size());
    for (const Neighbor& nb : neighborhoods[v]) colors.push_back(mapping.voxels[nb.index].mean_sh_dc);
    deviations[v] = color_deviations(colors);
  });
  set.appearance_scale = deviation_scale(deviations);

  parallel_for(count, [&](std::size_t v) {
    HsfhDescriptor& d = set.descriptors[v];
    d.geometric = geometric[v].bins;
    d.power_spectrum = mapping.voxels[v].mean_power_spectrum;
    double total = 0.0;
    for (double p : d.power_spectrum) total += p;
    if (total >= 1e-20) {
      for (double& p : d.power_spectrum) p /= total;
    } else {
      std::fill(d.power_spectrum.begin(), d.power_spectrum.end(), 0.0);
    }
    d.appearance_hist = appearance_histogram(deviations[v], set.appearance_scale,
                                             options.appearance_bins);
    if (options.with_view_features) {
      d.view = view_features(centroids[v], set.normals[v], options.cameras, mapping.scene_diagonal);
    }
  });
  return set;
}

}  // namespace splatprune
