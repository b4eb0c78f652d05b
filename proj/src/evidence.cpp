// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "splatprune/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "splatprune/error.hpp"
#include "splatprune/parallel.hpp"

namespace splatprune {

namespace {

// Weights of the evidence update.
constexpr double kPruneAppearance = 0.50;
constexpr double kPruneGeometry = 0.35;
constexpr double kPruneTransparency = 0.20;
constexpr double kPruneCommonness = 0.20;
constexpr double kKeepOpacity = 0.55;
constexpr double kKeepUniqueness = 0.50;

double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

// Mean over components of the per-component spread across a set of vectors.
template <typename Get>
double spread_across(std::size_t dims, std::size_t members, Get&& get, bool use_stddev) {
  if (dims == 0 || members == 0) return 0.0;
  std::vector<double> column(members);
  double total = 0.0;
  for (std::size_t c = 0; c < dims; ++c) {
    for (std::size_t m = 0; m < members; ++m) column[m] = get(m, c);
    const double var = population_variance(column);
    total += use_stddev ? std::sqrt(var) : var;
  }
  return total / static_cast<double>(dims);
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorCode::kNonConvergence, "incomplete beta continued fraction did not converge");
}

void check_shape(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::kDomainError,
                "Beta shape parameters must be finite and positive, got a=" + std::to_string(a) +
                    " b=" + std::to_string(b));
  }
}

}  // namespace

std::string_view to_string(SpreadReading reading) {
  return reading == SpreadReading::kNeighborhood ? "neighborhood" : "components";
}

SpreadReading parse_spread_reading(std::string_view text) {
  if (text == "neighborhood") return SpreadReading::kNeighborhood;
  if (text == "components") return SpreadReading::kComponents;
  throw Error(ErrorCode::kInvalidConfig, "unknown stat_spread '" + std::string(text) + "'");
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.5);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo + 1e-12);
  return out;
}

std::vector<LocalStats> local_statistics(std::span<const HsfhDescriptor> descriptors,
                                         const VoxelMapping& mapping,
                                         std::span<const std::vector<Neighbor>> neighborhoods,
                                         SpreadReading reading) {
  const std::size_t count = descriptors.size();
  if (mapping.voxel_count() != count || neighborhoods.size() != count) {
    throw Error(ErrorCode::kLengthMismatch, "descriptors, voxels and neighborhoods disagree");
  }
  std::vector<double> raw_s(count), raw_l(count), raw_u(count);
  std::vector<std::vector<double>> flat(count), appearance(count);
  parallel_for(count, [&](std::size_t v) {
    flat[v] = descriptors[v].flatten();
    appearance[v] = descriptors[v].appearance_components();
  });

  parallel_for(count, [&](std::size_t v) {
    const auto& nbrs = neighborhoods[v];
    if (reading == SpreadReading::kComponents) {
      const auto& g = descriptors[v].geometric;
      raw_l[v] = std::sqrt(population_variance(g));
      raw_s[v] = population_variance(appearance[v]);
    } else {
      // Member 0 is the voxel itself, then its neighbors in list order.
      auto member = [&](std::size_t m) { return m == 0 ? v : nbrs[m - 1].index; };
      raw_l[v] = spread_across(
          kGeometricSize, nbrs.size() + 1,
          [&](std::size_t m, std::size_t c) { return descriptors[member(m)].geometric[c]; }, true);
      raw_s[v] = spread_across(
          appearance[v].size(), nbrs.size() + 1,
          [&](std::size_t m, std::size_t c) { return appearance[member(m)][c]; }, false);
    }

    const auto& own = flat[v];
    if (nbrs.empty()) {
      raw_u[v] = 0.0;
    } else {
      std::vector<double> mean(own.size(), 0.0);
      for (const Neighbor& nb : nbrs) {
        const auto& other = flat[nb.index];
        for (std::size_t c = 0; c < own.size(); ++c) mean[c] += other[c];
      }
      double acc = 0.0;
      const double inv = 1.0 / static_cast<double>(nbrs.size());
      for (std::size_t c = 0; c < own.size(); ++c) {
        const double d = own[c] - mean[c] * inv;
        acc += d * d;
      }
      raw_u[v] = std::sqrt(acc);
    }
  });

  const auto s = minmax_normalize(raw_s);
  const auto l = minmax_normalize(raw_l);
  const auto u = minmax_normalize(raw_u);
  std::vector<LocalStats> out(count);
  for (std::size_t v = 0; v < count; ++v) {
    out[v] = LocalStats{1.0 - s[v], 1.0 - l[v], mapping.voxels[v].mean_opacity, u[v]};
  }
  return out;
}

std::vector<LocalStats> opacity_only_statistics(const VoxelMapping& mapping) {
  std::vector<LocalStats> out(mapping.voxel_count());
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v] = LocalStats{0.5, 0.5, mapping.voxels[v].mean_opacity, 0.5};
  }
  return out;
}

double kernel_weight(double distance, double bandwidth) {
  return std::exp(-(distance * distance) / (2.0 * bandwidth * bandwidth));
}

std::vector<EvidenceState> accumulate_evidence(std::span<const LocalStats> stats,
                                               std::span<const std::vector<Neighbor>> neighborhoods,
                                               double voxel_size, BetaPrior prior) {
  if (stats.size() != neighborhoods.size()) {
    throw Error(ErrorCode::kLengthMismatch, "statistics and neighborhoods disagree");
  }
  if (!(prior.a > 0.0) || !(prior.b > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "Beta prior must be positive");
  }
  if (!(voxel_size > 0.0)) throw Error(ErrorCode::kInvalidConfig, "voxel_size must be positive");
  std::vector<EvidenceState> out(stats.size());
  parallel_for(stats.size(), [&](std::size_t i) {
    double a = prior.a;
    double b = prior.b;
    for (const Neighbor& nb : neighborhoods[i]) {
      const LocalStats& sj = stats[nb.index];
      const double w = kernel_weight(nb.distance, voxel_size);
      b += w * (kPruneAppearance * sj.s + kPruneGeometry * sj.l + kPruneTransparency * (1.0 - sj.o));
      a += w * (kKeepOpacity * sj.o);
    }
    b += kPruneCommonness * (1.0 - stats[i].u);
    a += kKeepUniqueness * stats[i].u;
    out[i] = EvidenceState{a, b};
  });
  return out;
}

double direct_pruning_statistic(const LocalStats& s) {
  return kPruneAppearance * s.s + kPruneGeometry * s.l + kPruneTransparency * (1.0 - s.o) +
         kPruneCommonness * (1.0 - s.u);
}

void add_grazing_evidence(std::span<EvidenceState> evidence, std::span<const double> grazing) {
  if (evidence.size() != grazing.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one grazing value per evidence state required");
  }
  for (std::size_t i = 0; i < evidence.size(); ++i) evidence[i].a += kGrazingWeight * grazing[i];
}

double beta_mean(const EvidenceState& e) { return e.b / (e.a + e.b); }

double beta_variance(const EvidenceState& e) {
  const double s = e.a + e.b;
  return e.a * e.b / (s * s * (s + 1.0));
}

double reg_inc_beta(double x, double a, double b) {
  check_shape(a, b);
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::kDomainError, "x must lie in [0, 1], got " + std::to_string(x));
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double beta_inv_cdf(double q, double a, double b) {
  check_shape(a, b);
  if (!(q > 0.0 && q < 1.0)) {
    throw Error(ErrorCode::kDomainError, "quantile must lie in (0, 1), got " + std::to_string(q));
  }
  constexpr int kMaxIter = 200;
  constexpr double kTarget = 1e-12;
  const double lb = log_beta(a, b);
  double lo = 0.0;
  double hi = 1.0;
  double x = a / (a + b);
  double best_x = x;
  double best_err = std::numeric_limits<double>::infinity();
  double width_before = 2.0;
  for (int it = 0; it < kMaxIter; ++it) {
    const double f = reg_inc_beta(x, a, b) - q;
    if (std::abs(f) < best_err) {
      best_err = std::abs(f);
      best_x = x;
    }
    if (std::abs(f) <= kTarget) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    // With a shape below 1 the CDF can jump by more than the target between
    // adjacent doubles; the closest double is then the answer.
    if (std::nextafter(lo, 1.0) >= hi) return best_x;
    const double log_pdf = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lb;
    double next = x - f / std::exp(log_pdf);
    // Fall back to bisection when Newton leaves the bracket or stalls.
    const bool stalled = hi - lo > 0.5 * width_before;
    if (!std::isfinite(next) || next <= lo || next >= hi || stalled) next = 0.5 * (lo + hi);
    width_before = hi - lo;
    x = next;
  }
  if (best_err <= 1e-8) return best_x;
  throw Error(ErrorCode::kNonConvergence,
              "Beta inverse CDF did not converge for q=" + std::to_string(q));
}

std::string_view to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::kOptimistic: return "optimistic";
    case ScoreMode::kLcbGaussian: return "lcb_gaussian";
    case ScoreMode::kLcbExact: return "lcb_exact";
  }
  return "optimistic";
}

std::string_view to_string(ScoreBasis basis) {
  return basis == ScoreBasis::kRetention ? "retention" : "pruning";
}

ScoreMode parse_score_mode(std::string_view text) {
  if (text == "optimistic") return ScoreMode::kOptimistic;
  if (text == "lcb_gaussian") return ScoreMode::kLcbGaussian;
  if (text == "lcb_exact") return ScoreMode::kLcbExact;
  throw Error(ErrorCode::kInvalidConfig, "unknown score_mode '" + std::string(text) + "'");
}

ScoreBasis parse_score_basis(std::string_view text) {
  if (text == "retention") return ScoreBasis::kRetention;
  if (text == "pruning") return ScoreBasis::kPruning;
  throw Error(ErrorCode::kInvalidConfig, "unknown score_basis '" + std::string(text) + "'");
}

ScoreRecord score_one(const EvidenceState& e, const ScoreParams& params) {
  const double m = beta_mean(e);
  const double v = beta_variance(e);
  const bool retention = params.basis == ScoreBasis::kRetention;
  ScoreRecord r;
  r.mean = retention ? 1.0 - m : m;
  r.variance = v;
  switch (params.mode) {
    case ScoreMode::kOptimistic:
      r.score = r.mean + params.gamma * std::sqrt(v);
      break;
    case ScoreMode::kLcbGaussian:
      r.score = r.mean - params.z * std::sqrt(v);
      break;
    case ScoreMode::kLcbExact:
      // Retention probability ~ Beta(A, B); pruning probability ~ Beta(B, A).
      r.score = retention ? beta_inv_cdf(params.q, e.a, e.b) : beta_inv_cdf(params.q, e.b, e.a);
      break;
  }
  return r;
}

std::vector<ScoreRecord> score_splats(std::span<const EvidenceState> evidence,
                                      const ScoreParams& params) {
  if (params.gamma < 0.0 || params.z < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "gamma and z must be non-negative");
  }
  if (params.mode == ScoreMode::kLcbExact && !(params.q > 0.0 && params.q < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "q must lie in (0, 1)");
  }
  std::vector<ScoreRecord> out(evidence.size());
  parallel_for(evidence.size(), [&](std::size_t i) { out[i] = score_one(evidence[i], params); });
  return out;
}

}  // namespace splatprune
