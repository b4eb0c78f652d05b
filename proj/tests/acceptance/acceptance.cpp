// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers to run a subset.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles/beta_quadrature.hpp"
#include "oracles/reference_fpfh.hpp"
#include "splatprune/evidence.hpp"
#include "splatprune/parallel.hpp"
#include "splatprune/pruning.hpp"
#include "splatprune/report.hpp"
#include "support/fixtures.hpp"

using namespace splatprune;
using namespace splatprune::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

bool subset_of(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

SplatScene synth_of(std::size_t n_plane, std::size_t n_rod, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_plane = n_plane;
  spec.n_rod = n_rod;
  spec.seed = seed;
  return synth_scene(spec).scene;
}

Verdict ratio_fidelity() {
  const auto scene = synth_of(9500, 500, 1);
  set_thread_count(1);
  const auto start = Clock::now();
  bool exact = true;
  std::string counts;
  for (double ratio : {0.10, 0.20, 0.30}) {
    PruneConfig cfg;
    cfg.target_ratio = ratio;
    const auto out = run_pipeline(scene, cfg);
    const auto want = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(scene.size())));
    exact = exact && out.result.removed_ids.size() == want;
    counts += std::to_string(out.result.removed_ids.size()) + "/" + std::to_string(want) + " ";
  }
  const double elapsed = seconds_since(start);
  set_thread_count(0);
  return {exact && elapsed < 10.0,
          "removed/expected " + counts + fmt("in %.2f s on one thread", elapsed)};
}

Verdict threshold_nesting() {
  std::vector<SplatScene> scenes;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) scenes.push_back(synth_of(8000, 500, seed));
  for (std::uint64_t seed = 1; seed <= 3; ++seed) scenes.push_back(random_scene(seed, 5000, 1));
  bool nested = true;
  for (const auto& scene : scenes) {
    const auto run = score_scene(scene, {});
    const auto a = prune_by_ratio(scene, run, 0.1);
    const auto b = prune_by_ratio(scene, run, 0.3);
    const auto c = prune_by_ratio(scene, run, 0.7);
    nested = nested && subset_of(a.removed_ids, b.removed_ids) && subset_of(b.removed_ids, c.removed_ids);
  }
  return {nested, std::to_string(scenes.size()) + " scenes, removed(0.1) <= removed(0.3) <= removed(0.7)"};
}

Verdict beta_numerics() {
  double moment_err = 0.0;
  const std::vector<double> grid = {0.5, 0.8, 1.0, 1.7, 3.0, 5.5, 10.0, 18.0, 30.0, 50.0};
  for (double a : grid) {
    for (double b : grid) {
      // B / (A + B) is the mean of Beta(B, A).
      const auto q = oracle::beta_moments_by_quadrature(b, a);
      moment_err = std::max(moment_err, std::abs(beta_mean({a, b}) - q.mean));
      moment_err = std::max(moment_err, std::abs(beta_variance({a, b}) - q.variance));
    }
  }
  double cubic_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = i / 999.0;
    cubic_err = std::max(cubic_err, std::abs(reg_inc_beta(x, 2, 2) - (3 * x * x - 2 * x * x * x)));
  }
  double inverse_err = 0.0;
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    const double a = std::exp(rng.uniform(std::log(0.5), std::log(50.0)));
    const double b = std::exp(rng.uniform(std::log(0.5), std::log(50.0)));
    const double q = rng.uniform(0.001, 0.999);
    inverse_err = std::max(inverse_err, std::abs(reg_inc_beta(beta_inv_cdf(q, a, b), a, b) - q));
  }
  return {moment_err <= 1e-6 && cubic_err <= 1e-10 && inverse_err <= 1e-8,
          fmt("moments %.2e, I_x(2,2) %.2e, inverse round trip %.2e", moment_err, cubic_err, inverse_err)};
}

Verdict evidence_hand_cases() {
  double err = 0.0;
  {
    const std::vector<LocalStats> st = {{0, 0, 0, 0}, {1, 1, 0, 0}};
    const std::vector<std::vector<Neighbor>> nb = {{{1, 0.0}}, {}};
    const auto e = accumulate_evidence(st, nb, 1.0);
    err = std::max({err, std::abs(e[0].a - 1.0), std::abs(e[0].b - 2.25)});
  }
  {
    const std::vector<LocalStats> st = {{0.3, 0.7, 0.2, 1.0}};
    const auto e = accumulate_evidence(st, std::vector<std::vector<Neighbor>>(1), 1.0);
    err = std::max({err, std::abs(e[0].a - 1.5), std::abs(e[0].b - 1.0)});
  }
  {
    const std::vector<LocalStats> st(4, LocalStats{0, 0, 0, 0});
    const std::vector<std::vector<Neighbor>> nb = {{{1, 0.5}, {2, 1.0}, {3, 2.0}}, {}, {}, {}};
    const double h = 0.8;
    const auto e = accumulate_evidence(st, nb, h);
    double b = 1.2;
    for (double d : {0.5, 1.0, 2.0}) b += 0.2 * std::exp(-d * d / (2 * h * h));
    err = std::max({err, std::abs(e[0].a - 1.0), std::abs(e[0].b - b)});
  }
  return {err <= 1e-12, fmt("max deviation %.2e over 3 cases", err)};
}

Verdict fpfh_equivalence() {
  Rng rng(5);
  const auto start = Clock::now();
  double worst = 0.0;
  bool singletons = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + rng.index(181);
    const auto scene = random_scene(700 + trial, n, static_cast<int>(rng.index(4)));
    PipelineConfig cfg;
    cfg.voxel_frac = 0.001;
    const auto run = score_scene(scene, cfg);
    singletons = singletons && run.mapping.voxel_count() == n;
    if (!singletons) break;
    std::vector<oracle::RawSplat> raw;
    for (const auto& s : scene.splats()) {
      const auto& q = s.rotation;
      raw.push_back({{s.position[0], s.position[1], s.position[2]},
                     {s.scale_log[0], s.scale_log[1], s.scale_log[2]},
                     {q.w(), q.x(), q.y(), q.z()}});
    }
    const auto want = oracle::reference_fpfh(raw, cfg.k_neighbors, 1e-9 * run.mapping.voxel_size);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t b = 0; b < kGeometricSize; ++b) {
        worst = std::max(worst, std::abs(run.descriptors.descriptors[i].geometric[b] - want[i][b]));
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {singletons && worst <= 1e-9 && elapsed < 30.0,
          fmt("50 scenes, max bin deviation %.2e, %.2f s", worst, elapsed)};
}

Verdict rigid_invariance() {
  Rng rng(6);
  int accepted = 0;
  int drawn = 0;
  int identical = 0;
  double drift = 0.0;
  while (accepted < 20 && drawn < 200) {
    ++drawn;
    const auto scene = random_scene(6000 + drawn, 500, 0);
    PruneConfig cfg;
    cfg.target_ratio = 0.3;
    const auto a = run_pipeline(scene, cfg);
    // The removed set is only well defined when no two scores straddle the
    // cut closer than the permitted score slack.
    double lowest_kept = INFINITY, highest_removed = -INFINITY;
    for (auto i : a.result.kept_ids) lowest_kept = std::min(lowest_kept, a.result.scores[i]);
    for (auto i : a.result.removed_ids) highest_removed = std::max(highest_removed, a.result.scores[i]);
    if (lowest_kept - highest_removed < 1e-5) continue;
    ++accepted;
    const Eigen::Quaterniond q = rng.rotation();
    const Vec3 t = rng.vec3(-50, 50);
    std::vector<GaussianSplat> moved = scene.splats();
    for (auto& s : moved) {
      s.position = q * s.position + t;
      s.rotation = q * s.rotation;
    }
    const auto b = run_pipeline(SplatScene::from_splats(moved, 0), cfg);
    for (std::size_t i = 0; i < scene.size(); ++i) {
      drift = std::max(drift, std::abs(a.result.scores[i] - b.result.scores[i]));
    }
    identical += a.result.removed_ids == b.result.removed_ids;
  }
  return {accepted == 20 && identical == 20,
          std::to_string(identical) + "/" + std::to_string(accepted) + " identical (" +
              std::to_string(drawn - accepted) + " draws skipped for a near-tie at the cut), " +
              fmt("max score drift %.2e", drift)};
}

Verdict ablation_direction() {
  int wins = 0;
  double full_sum = 0.0, none_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    const auto synth = synth_scene(spec);
    std::size_t fine = 0;
    for (auto l : synth.labels) fine += l == SplatLabel::kFine;
    auto survival = [&](Ablation mode) {
      PruneConfig cfg;
      cfg.target_ratio = 0.3;
      cfg.pipeline.ablation = mode;
      const auto out = run_pipeline(synth.scene, cfg);
      std::size_t kept = 0;
      for (auto i : out.result.kept_ids) kept += synth.labels[i] == SplatLabel::kFine;
      return static_cast<double>(kept) / static_cast<double>(fine);
    };
    const double full = survival(Ablation::kFull);
    const double none = survival(Ablation::kNone);
    wins += full > none;
    full_sum += full;
    none_sum += none;
  }
  return {wins >= 18, std::to_string(wins) + "/20 seeds; mean FINE survival " +
                          fmt("full %.3f vs none %.3f", full_sum / 20, none_sum / 20)};
}

Verdict determinism_round_trip() {
  Rng rng(8);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto props = standard_props(static_cast<int>(rng.index(4)), rng.index(2) == 0);
    if (rng.index(3) == 0) props.push_back({"uchar", "tag"});
    const auto file = random_ply(rng, props, 1 + rng.index(64));
    const auto once = load_ply(file);
    const auto again = load_ply(save_ply(once));
    const auto p = once.payload();
    const auto q = again.payload();
    exact += p.size() == q.size() && std::equal(p.begin(), p.end(), q.begin());
  }

  TempDir dir("accept_det");
  save_ply_file(synth_of(4000, 400, 3), dir / "in.ply");
  auto invoke = [&](const std::string& tag) {
    std::ostringstream out, err;
    return cli::run({"prune", "-i", (dir / "in.ply").string(), "-o", (dir / (tag + ".ply")).string(), "--ratio",
                     "0.3", "--report", (dir / (tag + ".json")).string()},
                    out, err);
  };
  const bool ran = invoke("a") == 0 && invoke("b") == 0;
  const bool same = ran && read_file(dir / "a.ply") == read_file(dir / "b.ply") &&
                    read_file(dir / "a.json") == read_file(dir / "b.json");
  set_thread_count(0);
  return {exact == 100 && same, std::to_string(exact) + "/100 payloads bit-exact; CLI reruns " +
                                    (same ? "byte-identical" : "differ")};
}

Verdict scale() {
  TempDir dir("accept_scale");
  const auto in = (dir / "big.ply").string();
  std::ostringstream out, err;
  if (cli::run({"synth", "-o", in, "--n-plane", "990000", "--n-rod", "10000", "--seed", "9"}, out, err) != 0) {
    return {false, "synth failed: " + err.str()};
  }
  const std::string output = (dir / "pruned.ply").string();
  const auto start = Clock::now();
  const pid_t child = fork();
  if (child == 0) {
    execl(SPLATPRUNE_BIN, SPLATPRUNE_BIN, "prune", "-i", in.c_str(), "-o", output.c_str(), "--ratio", "0.3",
          static_cast<char*>(nullptr));
    _exit(127);
  }
  int status = 0;
  rusage usage{};
  if (child < 0 || wait4(child, &status, 0, &usage) != child) return {false, "could not run the prune binary"};
  const double elapsed = seconds_since(start);
  const double peak_gb = static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);
  const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  const std::size_t kept = ok ? load_ply_file(output).size() : 0;
  return {ok && kept == 700000 && elapsed < 120.0 && peak_gb < 4.0,
          fmt("1,000,000 splats in %.2f s, peak RSS %.3f GB, ", elapsed, peak_gb) + std::to_string(kept) +
              " kept"};
}

Verdict defaults() {
  const PipelineConfig c;
  const bool library = c.score.gamma == 0.25 && c.voxel_frac >= 0.01 && c.voxel_frac <= 0.02;
  std::ostringstream out, err;
  cli::run({"prune", "--help"}, out, err);
  const std::string help = out.str();
  const bool cli = help.find("--gamma FLOAT [0.25]") != std::string::npos &&
                   help.find("--voxel-frac FLOAT [" + std::to_string(c.voxel_frac).substr(0, 5) + "]") !=
                       std::string::npos;
  return {library && cli, fmt("gamma %.2f, voxel_frac %.3f; CLI help shows both", c.score.gamma, c.voxel_frac)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"ratio fidelity", ratio_fidelity},
      {"threshold nesting", threshold_nesting},
      {"Beta numerics", beta_numerics},
      {"evidence hand cases", evidence_hand_cases},
      {"FPFH oracle equivalence", fpfh_equivalence},
      {"rigid invariance", rigid_invariance},
      {"ablation direction", ablation_direction},
      {"determinism and round trip", determinism_round_trip},
      {"scale", scale},
      {"defaults", defaults},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && wanted.count(id) == 0) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << "criterion " << id << " (" << criteria[i].first << "): " << (v.pass ? "PASS" : "FAIL") << " - "
              << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
