// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "splatprune/pruning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "splatprune/error.hpp"
#include "splatprune/parallel.hpp"

namespace splatprune {

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& log) : log_(log) {}

  template <typename Fn>
  void run(const char* stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto end = std::chrono::steady_clock::now();
    log_.push_back({stage, std::chrono::duration<double, std::milli>(end - start).count()});
  }

 private:
  std::vector<StageTiming>& log_;
};

bool uses_descriptors(Ablation a) { return a == Ablation::kFull || a == Ablation::kNoBeta; }
bool uses_beta(Ablation a) { return a == Ablation::kFull || a == Ablation::kNoDesc; }

std::vector<double> column(std::span<const EvidenceState> e, bool take_a) {
  std::vector<double> out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = take_a ? e[i].a : e[i].b;
  return out;
}

PruneResult cut(std::span<const double> keys, std::size_t tau_index_limit, double tau) {
  PruneResult r;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const bool removed = keys[i] < tau || (keys[i] == tau && i < tau_index_limit);
    (removed ? r.removed_ids : r.kept_ids).push_back(i);
  }
  if (r.kept_ids.empty()) {
    throw Error(ErrorCode::kWouldRemoveAll, "threshold removes all " +
                                                std::to_string(keys.size()) + " splats");
  }
  r.tau_effective = tau;
  return r;
}

}  // namespace

std::string_view to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::kFull: return "full";
    case Ablation::kNoBeta: return "no_beta";
    case Ablation::kNoDesc: return "no_desc";
    case Ablation::kNone: return "none";
  }
  return "full";
}

Ablation parse_ablation(std::string_view text) {
  if (text == "full") return Ablation::kFull;
  if (text == "no_beta") return Ablation::kNoBeta;
  if (text == "no_desc") return Ablation::kNoDesc;
  if (text == "none") return Ablation::kNone;
  throw Error(ErrorCode::kInvalidConfig, "unknown ablation '" + std::string(text) + "'");
}

void PipelineConfig::validate() const {
  if (!(voxel_frac > 0.0 && voxel_frac <= 0.1)) {
    throw Error(ErrorCode::kInvalidFraction, "voxel_frac must lie in (0, 0.1]");
  }
  if (k_neighbors == 0) throw Error(ErrorCode::kInvalidConfig, "k_neighbors must be at least 1");
  if (interp_m == 0) throw Error(ErrorCode::kInvalidConfig, "interp_m must be at least 1");
  if (appearance_bins == 0) throw Error(ErrorCode::kInvalidConfig, "appearance_bins must be at least 1");
  if (!(score.gamma >= 0.0) || !(score.z >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "gamma and z must be non-negative");
  }
  if (!(score.q > 0.0 && score.q < 1.0)) throw Error(ErrorCode::kInvalidConfig, "q must lie in (0, 1)");
  if (!(prior.a > 0.0) || !(prior.b > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "prior_a and prior_b must be positive");
  }
}

void PruneConfig::validate() const {
  if (target_ratio.has_value() == tau.has_value()) {
    throw Error(ErrorCode::kInvalidConfig, "set exactly one of ratio and tau");
  }
  if (target_ratio && !(*target_ratio > 0.0 && *target_ratio < 1.0)) {
    throw Error(ErrorCode::kRatioOutOfRange, "ratio must lie in (0, 1)");
  }
  if (tau && !std::isfinite(*tau)) throw Error(ErrorCode::kInvalidConfig, "tau must be finite");
  pipeline.validate();
}

Threshold select_threshold(std::span<const double> scores, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kRatioOutOfRange, "ratio must lie in (0, 1), got " + std::to_string(ratio));
  }
  const std::size_t n = scores.size();
  if (n < 2) throw Error(ErrorCode::kEmptyInput, "threshold selection needs at least 2 scores");
  const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  };
  Threshold t;
  t.removed_count = k;
  if (k >= n) {
    t.tau = std::numeric_limits<double>::infinity();
    t.tie_index = n;
    return t;
  }
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), less);
  t.tau = scores[order[k]];
  t.tie_index = order[k];
  return t;
}

PruneResult prune(const SplatScene& scene, std::span<const double> scores, double tau) {
  if (scores.size() != scene.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one score per splat required");
  }
  auto r = cut(scores, 0, tau);
  r.scores.assign(scores.begin(), scores.end());
  return r;
}

PruneResult prune(const SplatScene& scene, std::span<const double> scores,
                  const Threshold& threshold) {
  if (scores.size() != scene.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one score per splat required");
  }
  auto r = cut(scores, threshold.tie_index, threshold.tau);
  r.scores.assign(scores.begin(), scores.end());
  return r;
}

ScoringRun score_scene(const SplatScene& scene, const PipelineConfig& config,
                       std::span<const Camera> cameras) {
  config.validate();
  if (scene.empty()) throw Error(ErrorCode::kEmptyScene, "cannot score an empty scene");
  if (config.with_view_features && cameras.empty()) {
    throw Error(ErrorCode::kNoCameras, "view features requested without cameras");
  }
  ScoringRun run;
  StageClock clock(run.timings);
  const Ablation mode = config.ablation;

  clock.run("voxelize", [&] {
    run.mapping = voxel_downsample(scene, config.voxel_frac, config.interp_m);
  });
  clock.run("neighborhoods", [&] {
    run.neighborhoods = voxel_neighborhoods(run.mapping, config.k_neighbors);
  });

  if (uses_descriptors(mode)) {
    clock.run("descriptors", [&] {
      DescriptorOptions opts;
      opts.appearance_bins = config.appearance_bins;
      opts.with_view_features = config.with_view_features;
      opts.cameras = cameras;
      run.descriptors = compute_descriptors(scene, run.mapping, run.neighborhoods, opts);
    });
    clock.run("statistics", [&] {
      run.stats = local_statistics(run.descriptors.descriptors, run.mapping, run.neighborhoods,
                                   config.stat_spread);
    });
  } else {
    clock.run("statistics", [&] { run.stats = opacity_only_statistics(run.mapping); });
  }

  if (uses_beta(mode)) {
    clock.run("evidence", [&] {
      run.voxel_evidence =
          accumulate_evidence(run.stats, run.neighborhoods, run.mapping.voxel_size, config.prior);
      if (!cameras.empty() && uses_descriptors(mode)) {
        std::vector<double> grazing(run.voxel_evidence.size());
        for (std::size_t v = 0; v < grazing.size(); ++v) {
          const auto f = view_features(run.mapping.voxels[v].centroid, run.descriptors.normals[v],
                                       cameras, run.mapping.scene_diagonal);
          grazing[v] = 1.0 - f[4];  // 1 - mean |n . view_dir|
        }
        add_grazing_evidence(run.voxel_evidence, grazing);
      }
    });
    clock.run("interpolate", [&] {
      const auto a = interpolate_to_splats(column(run.voxel_evidence, true), run.mapping);
      const auto b = interpolate_to_splats(column(run.voxel_evidence, false), run.mapping);
      run.splat_evidence.resize(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) run.splat_evidence[i] = EvidenceState{a[i], b[i]};
    });
    clock.run("score", [&] {
      const auto records = score_splats(run.splat_evidence, config.score);
      run.scores.resize(records.size());
      for (std::size_t i = 0; i < records.size(); ++i) run.scores[i] = records[i].score;
    });
    run.higher_pruned_first = config.score.basis == ScoreBasis::kPruning;
  } else {
    std::vector<double> direct;
    clock.run("interpolate", [&] {
      std::vector<double> c(run.stats.size());
      for (std::size_t v = 0; v < c.size(); ++v) c[v] = direct_pruning_statistic(run.stats[v]);
      direct = interpolate_to_splats(c, run.mapping);
    });
    clock.run("score", [&] {
      const auto norm = minmax_normalize(direct);
      run.scores.resize(norm.size());
      for (std::size_t i = 0; i < norm.size(); ++i) run.scores[i] = 1.0 - norm[i];
    });
  }

  run.rank_keys = run.scores;
  if (run.higher_pruned_first) {
    for (double& k : run.rank_keys) k = -k;
  }
  return run;
}

PruneResult prune_by_ratio(const SplatScene& scene, const ScoringRun& run, double ratio) {
  const Threshold t = select_threshold(run.rank_keys, ratio);
  PruneResult r = prune(scene, run.rank_keys, t);
  r.scores = run.scores;
  if (run.higher_pruned_first) r.tau_effective = -r.tau_effective;
  return r;
}

PruneResult prune_by_tau(const SplatScene& scene, const ScoringRun& run, double tau) {
  PruneResult r = prune(scene, run.rank_keys, run.higher_pruned_first ? -tau : tau);
  r.scores = run.scores;
  r.tau_effective = tau;
  return r;
}

PipelineResult run_pipeline(const SplatScene& scene, const PruneConfig& config,
                            std::span<const Camera> cameras) {
  config.validate();
  PipelineResult out;
  out.scoring = score_scene(scene, config.pipeline, cameras);
  std::vector<StageTiming>& log = out.scoring.timings;
  const auto start = std::chrono::steady_clock::now();
  out.result = config.target_ratio ? prune_by_ratio(scene, out.scoring, *config.target_ratio)
                                   : prune_by_tau(scene, out.scoring, *config.tau);
  const auto end = std::chrono::steady_clock::now();
  log.push_back({"threshold", std::chrono::duration<double, std::milli>(end - start).count()});
  return out;
}

}  // namespace splatprune
