// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splatprune/evidence.hpp"
#include "splatprune/hsfh.hpp"
#include "splatprune/spatial.hpp"
#include "splatprune/splat_io.hpp"

namespace splatprune {

/// Which halves of the method run: descriptors (s, l, u) and Beta scoring.
enum class Ablation { kFull, kNoBeta, kNoDesc, kNone };

std::string_view to_string(Ablation ablation);
Ablation parse_ablation(std::string_view text);

struct PipelineConfig {
  double voxel_frac = kDefaultVoxelFrac;
  std::size_t k_neighbors = kDefaultKNeighbors;
  std::size_t interp_m = kDefaultInterpM;
  std::size_t appearance_bins = kDefaultAppearanceBins;
  bool with_view_features = false;
  SpreadReading stat_spread = SpreadReading::kNeighborhood;
  ScoreParams score;
  BetaPrior prior;
  Ablation ablation = Ablation::kFull;

  void validate() const;
};

struct PruneConfig {
  std::optional<double> target_ratio;
  std::optional<double> tau;
  PipelineConfig pipeline;

  /// Exactly one of target_ratio / tau, ratio strictly inside (0, 1).
  void validate() const;
};

/// A lexicographic cut on (score, index): entries below (tau, tie_index)
/// are removed. A plain threshold has tie_index 0.
struct Threshold {
  double tau = 0.0;
  std::size_t tie_index = 0;
  std::size_t removed_count = 0;
};

/// Removes the round(ratio * N) lowest (score, index) entries.
Threshold select_threshold(std::span<const double> scores, double ratio);

struct PruneResult {
  std::vector<std::size_t> kept_ids;
  std::vector<std::size_t> removed_ids;
  double tau_effective = 0.0;
  std::vector<double> scores;
};

/// Removes every splat with score < tau.
PruneResult prune(const SplatScene& scene, std::span<const double> scores, double tau);
PruneResult prune(const SplatScene& scene, std::span<const double> scores,
                  const Threshold& threshold);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

/// Everything computed by the single scoring pass. Voxel-level fields are
/// empty for stages an ablation skips.
struct ScoringRun {
  VoxelMapping mapping;
  std::vector<std::vector<Neighbor>> neighborhoods;
  DescriptorSet descriptors;
  std::vector<LocalStats> stats;
  std::vector<EvidenceState> voxel_evidence;
  std::vector<EvidenceState> splat_evidence;
  std::vector<double> scores;
  /// Ascending key = pruned first. Equals scores except for the pruning
  /// basis, where higher scores are pruned first.
  std::vector<double> rank_keys;
  bool higher_pruned_first = false;
  std::vector<StageTiming> timings;
};

ScoringRun score_scene(const SplatScene& scene, const PipelineConfig& config,
                       std::span<const Camera> cameras = {});

PruneResult prune_by_ratio(const SplatScene& scene, const ScoringRun& run, double ratio);
PruneResult prune_by_tau(const SplatScene& scene, const ScoringRun& run, double tau);

struct PipelineResult {
  ScoringRun scoring;
  PruneResult result;
};

PipelineResult run_pipeline(const SplatScene& scene, const PruneConfig& config,
                            std::span<const Camera> cameras = {});

}  // namespace splatprune
