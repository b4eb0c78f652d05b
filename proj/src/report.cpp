// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "splatprune/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <random>

#include <json.hpp>

#include "splatprune/error.hpp"
#include "splatprune/parallel.hpp"

namespace splatprune {

namespace {

using ordered_json = nlohmann::ordered_json;

double directed_mean(std::span<const Vec3> from, const KdTree& to) {
  std::vector<double> d(from.size());
  parallel_for(from.size(), [&](std::size_t i) { d[i] = to.nearest(from[i], 1)[0].distance; });
  double total = 0.0;
  for (double v : d) total += v;
  return total / static_cast<double>(from.size());
}

ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_sig9(v);
}

ordered_json summary_json(const StatSummary& s) {
  ordered_json j;
  j["min"] = number(s.min);
  j["mean"] = number(s.mean);
  j["max"] = number(s.max);
  return j;
}

// Portable generators: the standard distributions are implementation-defined.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  Vec3 normal3() {
    const double x = normal();
    const double y = normal();
    const double z = normal();
    return Vec3(x, y, z);
  }

 private:
  std::mt19937_64 engine_;
};

constexpr double kPlaneHalfSide = 5.0;
constexpr double kRodHeight = 1.5;

}  // namespace

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptyInput, "chamfer needs two non-empty sets");
  const KdTree tree_a(std::vector<Vec3>(a.begin(), a.end()));
  const KdTree tree_b(std::vector<Vec3>(b.begin(), b.end()));
  return 0.5 * (directed_mean(a, tree_b) + directed_mean(b, tree_a));
}

StatSummary summarize(std::span<const double> values) {
  StatSummary s;
  if (values.empty()) return s;
  s.min = values[0];
  s.max = values[0];
  double total = 0.0;
  for (double v : values) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    total += v;
  }
  s.mean = total / static_cast<double>(values.size());
  return s;
}

ScoreHistogram score_histogram(std::span<const double> scores, std::size_t bins) {
  ScoreHistogram h;
  h.counts.assign(bins, 0);
  if (scores.empty() || bins == 0) return h;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  h.min = *lo;
  h.max = *hi;
  const double range = h.max - h.min;
  for (double s : scores) {
    std::size_t b = 0;
    if (range > 0.0) {
      const double t = (s - h.min) / range * static_cast<double>(bins);
      b = std::min(static_cast<std::size_t>(std::max(t, 0.0)), bins - 1);
    }
    ++h.counts[b];
  }
  return h;
}

PruneReport build_report(const PipelineResult& run, const SplatScene& original,
                         const SplatScene& pruned, const PipelineConfig& config,
                         bool include_timings) {
  PruneReport r;
  r.input_count = original.size();
  r.output_count = pruned.size();
  r.ratio_achieved =
      static_cast<double>(run.result.removed_ids.size()) / static_cast<double>(original.size());
  r.tau_effective = run.result.tau_effective;
  r.gamma = config.score.gamma;
  r.ablation = std::string(to_string(config.ablation));
  r.voxel_frac = config.voxel_frac;
  r.k_neighbors = config.k_neighbors;
  r.score_histogram = score_histogram(run.result.scores);

  const auto& stats = run.scoring.stats;
  std::vector<double> s(stats.size()), l(stats.size()), o(stats.size()), u(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    s[i] = stats[i].s;
    l[i] = stats[i].l;
    o[i] = stats[i].o;
    u[i] = stats[i].u;
  }
  r.s = summarize(s);
  r.l = summarize(l);
  r.o = summarize(o);
  r.u = summarize(u);

  const auto a = original.positions();
  const auto b = pruned.positions();
  r.chamfer_to_original = chamfer(a, b);
  if (include_timings) r.timing_ms = run.scoring.timings;
  return r;
}

double round_sig9(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return std::strtod(buf, nullptr);
}

std::string report_to_json(const PruneReport& report) {
  ordered_json j;
  j["input_count"] = report.input_count;
  j["output_count"] = report.output_count;
  j["ratio_achieved"] = number(report.ratio_achieved);
  j["tau_effective"] = number(report.tau_effective);
  j["gamma"] = number(report.gamma);
  j["ablation"] = report.ablation;
  j["voxel_frac"] = number(report.voxel_frac);
  j["k_neighbors"] = report.k_neighbors;
  ordered_json hist;
  hist["min"] = number(report.score_histogram.min);
  hist["max"] = number(report.score_histogram.max);
  hist["counts"] = report.score_histogram.counts;
  j["score_histogram"] = hist;
  ordered_json stats;
  stats["s"] = summary_json(report.s);
  stats["l"] = summary_json(report.l);
  stats["o"] = summary_json(report.o);
  stats["u"] = summary_json(report.u);
  j["stats_summary"] = stats;
  j["chamfer_to_original"] = number(report.chamfer_to_original);
  ordered_json timing = ordered_json::object();
  for (const auto& t : report.timing_ms) timing[t.stage] = number(t.ms);
  j["timing_ms"] = timing;
  return j.dump(2) + "\n";
}

std::string_view to_string(SplatLabel label) {
  return label == SplatLabel::kRedundant ? "REDUNDANT" : "FINE";
}

SynthScene synth_scene(const SynthSpec& spec) {
  if (spec.n_plane == 0 && spec.n_rod == 0) {
    throw Error(ErrorCode::kEmptySpec, "synth scene needs n_plane or n_rod > 0");
  }
  if (!(spec.noise >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "noise must be non-negative");
  SynthRng rng(spec.seed);
  std::vector<GaussianSplat> splats;
  splats.reserve(spec.n_plane + spec.n_rod);
  std::vector<SplatLabel> labels;
  labels.reserve(spec.n_plane + spec.n_rod);

  if (spec.n_plane > 0) {
    const double spacing = 2.0 * kPlaneHalfSide / std::sqrt(static_cast<double>(spec.n_plane));
    const double tangent = std::log(0.5 * spacing);
    const double thin = std::log(0.05 * spacing);
    for (std::size_t i = 0; i < spec.n_plane; ++i) {
      GaussianSplat s;
      s.position = Vec3(rng.uniform(-kPlaneHalfSide, kPlaneHalfSide),
                        rng.uniform(-kPlaneHalfSide, kPlaneHalfSide), 0.0);
      s.position += spec.noise * rng.normal3();
      const double spin = rng.uniform(0.0, 2.0 * std::numbers::pi);
      s.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(spin, Vec3::UnitZ()));
      s.scale_log = Vec3(tangent, tangent, thin);
      s.sh_dc = Vec3(0.8, 0.3, -0.2);
      s.opacity_logit = 2.0;
      splats.push_back(std::move(s));
      labels.push_back(SplatLabel::kRedundant);
    }
  }

  if (spec.n_rod > 0) {
    // A wavy curve hovering above the plane.
    auto curve = [](double t) {
      return Vec3(-4.0 + 8.0 * t, 2.5 * std::sin(2.0 * std::numbers::pi * t),
                  kRodHeight + 0.5 * std::cos(3.0 * std::numbers::pi * t));
    };
    const double length_estimate = 12.0;
    const double spacing = length_estimate / static_cast<double>(spec.n_rod);
    const double along = std::log(2.0 * spacing);
    const double across = std::log(0.2 * spacing);
    for (std::size_t i = 0; i < spec.n_rod; ++i) {
      const double t = (static_cast<double>(i) + rng.uniform()) / static_cast<double>(spec.n_rod);
      const Vec3 tangent = (curve(std::min(t + 1e-4, 1.0)) - curve(std::max(t - 1e-4, 0.0))).normalized();
      Vec3 side = tangent.unitOrthogonal();
      const double spin = rng.uniform(0.0, 2.0 * std::numbers::pi);
      side = Eigen::AngleAxisd(spin, tangent) * side;
      Mat3 basis;
      basis.col(0) = tangent;
      basis.col(1) = side;
      basis.col(2) = tangent.cross(side);
      GaussianSplat s;
      s.position = curve(t) + spec.noise * rng.normal3();
      s.rotation = Eigen::Quaterniond(basis).normalized();
      s.scale_log = Vec3(along, across, across);
      s.sh_dc = Vec3(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
      s.opacity_logit = (i % 2 == 0) ? -1.0 : 2.0;
      splats.push_back(std::move(s));
      labels.push_back(SplatLabel::kFine);
    }
  }

  return SynthScene{SplatScene::from_splats(splats, 0), std::move(labels)};
}

std::string labels_to_json(std::span<const SplatLabel> labels) {
  ordered_json j = ordered_json::array();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ordered_json e;
    e["index"] = i;
    e["label"] = std::string(to_string(labels[i]));
    j.push_back(std::move(e));
  }
  return j.dump() + "\n";
}

}  // namespace splatprune
