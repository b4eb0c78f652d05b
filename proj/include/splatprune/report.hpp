// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splatprune/pruning.hpp"
#include "splatprune/splat_io.hpp"

namespace splatprune {

inline constexpr std::size_t kScoreHistogramBins = 64;

/// Symmetric chamfer distance: the two directed mean nearest-neighbor
/// distances, averaged.
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);

struct StatSummary {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

StatSummary summarize(std::span<const double> values);

struct ScoreHistogram {
  double min = 0.0;
  double max = 0.0;
  std::vector<std::uint64_t> counts;
};

/// Uniform bins over [min, max] of the scores; everything lands in bin 0
/// when the range is empty.
ScoreHistogram score_histogram(std::span<const double> scores,
                               std::size_t bins = kScoreHistogramBins);

struct PruneReport {
  std::size_t input_count = 0;
  std::size_t output_count = 0;
  double ratio_achieved = 0.0;
  double tau_effective = 0.0;
  double gamma = 0.0;
  std::string ablation;
  double voxel_frac = 0.0;
  std::size_t k_neighbors = 0;
  ScoreHistogram score_histogram;
  StatSummary s, l, o, u;
  double chamfer_to_original = 0.0;
  /// Empty unless timings were requested; wall-clock values are not
  /// reproducible across runs.
  std::vector<StageTiming> timing_ms;
};

PruneReport build_report(const PipelineResult& run, const SplatScene& original,
                         const SplatScene& pruned, const PipelineConfig& config,
                         bool include_timings = false);

/// Fixed key order, floats rounded to 9 significant digits.
std::string report_to_json(const PruneReport& report);

/// Rounds to 9 significant digits (non-finite values pass through).
double round_sig9(double value);

enum class SplatLabel { kRedundant, kFine };

std::string_view to_string(SplatLabel label);

struct SynthSpec {
  std::size_t n_plane = 8000;
  std::size_t n_rod = 500;
  double noise = 0.01;
  std::uint64_t seed = 1;
};

struct SynthScene {
  SplatScene scene;
  std::vector<SplatLabel> labels;
};

/// Deterministic SH-degree-0 fixture: a dense opaque uniformly colored plane
/// (REDUNDANT, indices first) and a thin curve above it with varied colors
/// and alternating opacity (FINE).
SynthScene synth_scene(const SynthSpec& spec);

/// [{"index": i, "label": "REDUNDANT"|"FINE"}, ...]
std::string labels_to_json(std::span<const SplatLabel> labels);

}  // namespace splatprune
