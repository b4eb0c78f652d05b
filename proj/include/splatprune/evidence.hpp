// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "splatprune/hsfh.hpp"
#include "splatprune/spatial.hpp"

namespace splatprune {

inline constexpr double kDefaultGamma = 0.25;
inline constexpr double kDefaultZ = 1.0;
inline constexpr double kDefaultQuantile = 0.05;
/// Retention bonus per unit of the camera-derived grazing proxy.
inline constexpr double kGrazingWeight = 0.25;

/// Per-voxel statistics, each in [0, 1].
///   s: low-frequency appearance consistency
///   l: low geometric contrast
///   o: mean activated opacity
///   u: geometric uniqueness
struct LocalStats {
  double s = 0.5;
  double l = 0.5;
  double o = 0.5;
  double u = 0.5;
};

/// Which spread feeds s and l.
///   kNeighborhood: per-component spread of the descriptor blocks across the
///     voxel and its neighbors, so homogeneous surroundings score high.
///   kComponents: spread of the voxel's own histogram entries; a peaked
///     histogram counts as high contrast.
enum class SpreadReading { kNeighborhood, kComponents };

std::string_view to_string(SpreadReading reading);
SpreadReading parse_spread_reading(std::string_view text);

/// (x - min) / (max - min + 1e-12), or 0.5 everywhere when max == min.
std::vector<double> minmax_normalize(std::span<const double> values);

std::vector<LocalStats> local_statistics(std::span<const HsfhDescriptor> descriptors,
                                         const VoxelMapping& mapping,
                                         std::span<const std::vector<Neighbor>> neighborhoods,
                                         SpreadReading reading = SpreadReading::kNeighborhood);

/// Opacity-only statistics: s, l and u pinned at the neutral 0.5.
std::vector<LocalStats> opacity_only_statistics(const VoxelMapping& mapping);

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
};

/// Beta evidence: A supports retention, B supports pruning.
struct EvidenceState {
  double a = 1.0;
  double b = 1.0;
};

/// Gaussian kernel exp(-d^2 / (2 h^2)).
double kernel_weight(double distance, double bandwidth);

/// For every neighbor j of i:
///   B_i += w_j (0.50 s_j + 0.35 l_j + 0.20 (1 - o_j)),  A_i += w_j 0.55 o_j,
/// then once per voxel B_i += 0.20 (1 - u_i), A_i += 0.50 u_i.
std::vector<EvidenceState> accumulate_evidence(std::span<const LocalStats> stats,
                                               std::span<const std::vector<Neighbor>> neighborhoods,
                                               double voxel_size, BetaPrior prior = {});

/// The weighted pruning statistic used without Beta modelling.
double direct_pruning_statistic(const LocalStats& s);

/// A += 0.25 e for a camera-derived grazing proxy e in [0, 1].
void add_grazing_evidence(std::span<EvidenceState> evidence, std::span<const double> grazing);

/// Expected pruning probability B / (A + B).
double beta_mean(const EvidenceState& e);
double beta_variance(const EvidenceState& e);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double reg_inc_beta(double x, double a, double b);
/// x with I_x(a, b) = q; bisection safeguarded Newton.
double beta_inv_cdf(double q, double a, double b);

enum class ScoreMode { kOptimistic, kLcbGaussian, kLcbExact };
enum class ScoreBasis { kRetention, kPruning };

std::string_view to_string(ScoreMode mode);
std::string_view to_string(ScoreBasis basis);
ScoreMode parse_score_mode(std::string_view text);
ScoreBasis parse_score_basis(std::string_view text);

struct ScoreParams {
  ScoreMode mode = ScoreMode::kOptimistic;
  ScoreBasis basis = ScoreBasis::kRetention;
  double gamma = kDefaultGamma;
  double z = kDefaultZ;
  double q = kDefaultQuantile;
};

struct ScoreRecord {
  double mean = 0.0;      // mean of the basis distribution
  double variance = 0.0;
  double score = 0.0;
};

ScoreRecord score_one(const EvidenceState& e, const ScoreParams& params);
std::vector<ScoreRecord> score_splats(std::span<const EvidenceState> evidence,
                                      const ScoreParams& params);

}  // namespace splatprune
