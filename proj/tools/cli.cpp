// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "splatprune/parallel.hpp"
#include "splatprune/pruning.hpp"
#include "splatprune/report.hpp"
#include "splatprune/splat_io.hpp"

namespace splatprune::cli {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct ConfigSyntaxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --config files are flat JSON objects keyed by flag name; underscores and
// dashes are interchangeable. Keys apply to the subcommand being run.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto values = opt->reduced_results();
        j[name] = values.size() == 1 ? json(values.front()) : json(values);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::parse_error& e) {
      throw ConfigSyntaxError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigSyntaxError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      for (const CLI::App* sub : root_->get_subcommands()) item.parents.push_back(sub->get_name());
      item.name = key;
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar_text(key, v));
      } else {
        item.inputs.push_back(scalar_text(key, value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar_text(const std::string& key, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw ConfigSyntaxError("config key '" + key + "' must hold a scalar or an array of scalars");
  }

  const CLI::App* root_;
};

struct Options {
  std::string input;
  std::string output;
  std::string report;
  std::string cameras;
  std::string labels;
  double ratio = 0.0;
  double tau = 0.0;
  std::vector<std::string> ratios;
  double gamma = kDefaultGamma;
  double z = kDefaultZ;
  double q = kDefaultQuantile;
  double voxel_frac = kDefaultVoxelFrac;
  std::size_t k_neighbors = kDefaultKNeighbors;
  std::size_t interp_m = kDefaultInterpM;
  std::size_t appearance_bins = kDefaultAppearanceBins;
  bool with_view_features = false;
  std::string stat_spread = "neighborhood";
  std::string normal_source = "min_axis";
  std::string ablation = "full";
  std::string score_mode = "optimistic";
  std::string score_basis = "retention";
  double prior_a = 1.0;
  double prior_b = 1.0;
  unsigned threads = 0;
  bool report_timings = false;
  std::size_t n_plane = 8000;
  std::size_t n_rod = 500;
  double noise = 0.01;
  std::uint64_t seed = 1;

  CLI::Option* ratio_opt = nullptr;
  CLI::Option* tau_opt = nullptr;
};

// CLI11 reads config files only through the root app, so each subcommand's
// --config forwards its path to a hidden root option.
void add_common(CLI::App* sub, Options& o, CLI::Option* root_config) {
  sub->add_option("--config", "JSON file of flag values; command-line flags take precedence")
      ->type_name("FILE")
      ->configurable(false)
      ->trigger_on_parse()
      ->each([root_config](const std::string& path) { root_config->add_result(path); });
  sub->add_option("--threads", o.threads, "Worker threads, 0 = all available cores")
      ->envname("SPLATPRUNE_THREADS");
}

void add_pipeline(CLI::App* sub, Options& o) {
  sub->add_option("--input,-i", o.input, "Input PLY")->required();
  sub->add_option("--cameras", o.cameras, "Optional cameras JSON");
  sub->add_option("--gamma", o.gamma, "Uncertainty weight of the optimistic score");
  sub->add_option("--z", o.z, "Standard deviations subtracted by lcb_gaussian");
  sub->add_option("--q", o.q, "Beta quantile used by lcb_exact");
  sub->add_option("--voxel-frac", o.voxel_frac, "Voxel size as a fraction of the scene diagonal");
  sub->add_option("--k-neighbors", o.k_neighbors, "Voxel neighborhood size");
  sub->add_option("--interp-m", o.interp_m, "Voxels blended when interpolating back to splats");
  sub->add_option("--appearance-bins", o.appearance_bins, "Bins of the color-deviation histogram");
  sub->add_flag("--with-view-features", o.with_view_features,
                "Append the 10-value camera block to descriptors (needs --cameras)");
  sub->add_option("--normal-source", o.normal_source, "Where splat normals come from")
      ->check(CLI::IsMember({"min_axis"}));
  sub->add_option("--stat-spread", o.stat_spread, "How s and l measure spread")
      ->check(CLI::IsMember({"neighborhood", "components"}));
  sub->add_option("--ablation", o.ablation, "Pipeline variant")
      ->check(CLI::IsMember({"full", "no_beta", "no_desc", "none"}));
  sub->add_option("--score-mode", o.score_mode, "Score formula")
      ->check(CLI::IsMember({"optimistic", "lcb_gaussian", "lcb_exact"}));
  sub->add_option("--score-basis", o.score_basis, "Whether the Beta mean is read as retention or pruning")
      ->check(CLI::IsMember({"retention", "pruning"}));
  sub->add_option("--prior-a", o.prior_a, "Beta prior retention count");
  sub->add_option("--prior-b", o.prior_b, "Beta prior pruning count");
}

PipelineConfig pipeline_config(const Options& o) {
  PipelineConfig c;
  c.voxel_frac = o.voxel_frac;
  c.k_neighbors = o.k_neighbors;
  c.interp_m = o.interp_m;
  c.appearance_bins = o.appearance_bins;
  c.with_view_features = o.with_view_features;
  c.stat_spread = parse_spread_reading(o.stat_spread);
  c.ablation = parse_ablation(o.ablation);
  c.score.mode = parse_score_mode(o.score_mode);
  c.score.basis = parse_score_basis(o.score_basis);
  c.score.gamma = o.gamma;
  c.score.z = o.z;
  c.score.q = o.q;
  c.prior = BetaPrior{o.prior_a, o.prior_b};
  return c;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::ios_base::failure("failed writing '" + path.string() + "'");
}

std::vector<Camera> load_cameras(const Options& o) {
  if (o.cameras.empty()) return {};
  return parse_cameras(read_text(o.cameras));
}

void write_outputs(const SplatScene& scene, const PipelineResult& run, const PipelineConfig& config,
                   const std::filesystem::path& ply, const std::filesystem::path& report,
                   bool timings) {
  const SplatScene pruned = scene.subset(run.result.kept_ids);
  save_ply_file(pruned, ply);
  if (!report.empty()) {
    write_text(report, report_to_json(build_report(run, scene, pruned, config, timings)));
  }
}

int cmd_prune(const Options& o) {
  PruneConfig config;
  if (o.ratio_opt->count() > 0) config.target_ratio = o.ratio;
  if (o.tau_opt->count() > 0) config.tau = o.tau;
  config.pipeline = pipeline_config(o);
  config.validate();
  const auto cameras = load_cameras(o);
  const SplatScene scene = load_ply_file(o.input);
  const PipelineResult run = run_pipeline(scene, config, cameras);
  write_outputs(scene, run, config.pipeline, o.output, o.report, o.report_timings);
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  std::vector<double> ratios;
  for (const std::string& token : o.ratios) {
    if (token.empty()) continue;
    std::size_t used = 0;
    double r = 0.0;
    try {
      r = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw Error(ErrorCode::kInvalidConfig, "bad ratio '" + token + "'");
    ratios.push_back(r);
  }
  if (ratios.empty()) throw Error(ErrorCode::kInvalidConfig, "sweep needs at least one ratio");
  std::set<std::string> names;
  for (double r : ratios) {
    PruneConfig check;
    check.target_ratio = r;
    check.pipeline = pipeline_config(o);
    check.validate();
    if (!names.insert(sweep_path(o.output, r).string()).second) {
      throw Error(ErrorCode::kInvalidConfig, "ratios map to the same output suffix");
    }
  }
  const PipelineConfig config = pipeline_config(o);
  const auto cameras = load_cameras(o);
  const SplatScene scene = load_ply_file(o.input);
  PipelineResult run;
  run.scoring = score_scene(scene, config, cameras);
  for (double r : ratios) {
    run.result = prune_by_ratio(scene, run.scoring, r);
    const std::filesystem::path report = o.report.empty() ? "" : sweep_path(o.report, r);
    write_outputs(scene, run, config, sweep_path(o.output, r), report, o.report_timings);
  }
  return kExitOk;
}

template <typename Range>
ordered_json array_of(const Range& values) {
  ordered_json a = ordered_json::array();
  for (double v : values) a.push_back(v);
  return a;
}

int cmd_describe(const Options& o, std::ostream& out) {
  const PipelineConfig config = pipeline_config(o);
  config.validate();
  const auto cameras = load_cameras(o);
  const SplatScene scene = load_ply_file(o.input);
  const ScoringRun run = score_scene(scene, config, cameras);

  std::ostringstream lines;
  for (std::size_t v = 0; v < run.mapping.voxel_count(); ++v) {
    const Voxel& voxel = run.mapping.voxels[v];
    ordered_json j;
    j["voxel"] = v;
    j["member_count"] = voxel.member_count;
    j["centroid"] = array_of(voxel.centroid);
    j["mean_opacity"] = voxel.mean_opacity;
    if (!run.descriptors.descriptors.empty()) {
      const HsfhDescriptor& d = run.descriptors.descriptors[v];
      j["normal"] = array_of(run.descriptors.normals[v]);
      j["geometric"] = array_of(d.geometric);
      j["power_spectrum"] = array_of(d.power_spectrum);
      j["appearance_hist"] = array_of(d.appearance_hist);
      if (d.view) j["view"] = array_of(*d.view);
    }
    j["s"] = run.stats[v].s;
    j["l"] = run.stats[v].l;
    j["o"] = run.stats[v].o;
    j["u"] = run.stats[v].u;
    if (!run.voxel_evidence.empty()) {
      j["A"] = run.voxel_evidence[v].a;
      j["B"] = run.voxel_evidence[v].b;
    }
    lines << j.dump() << '\n';
  }
  if (o.output.empty()) {
    out << lines.str();
  } else {
    write_text(o.output, lines.str());
  }
  return kExitOk;
}

int cmd_synth(const Options& o) {
  SynthSpec spec;
  spec.n_plane = o.n_plane;
  spec.n_rod = o.n_rod;
  spec.noise = o.noise;
  spec.seed = o.seed;
  const SynthScene synth = synth_scene(spec);
  save_ply_file(synth.scene, o.output);
  if (!o.labels.empty()) write_text(o.labels, labels_to_json(synth.labels));
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingProperty:
    case ErrorCode::kUnsupportedFormat:
    case ErrorCode::kTruncatedPayload:
      return kExitParse;
    case ErrorCode::kInvalidFraction:
    case ErrorCode::kRatioOutOfRange:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kEmptySpec:
    case ErrorCode::kNoCameras:
    case ErrorCode::kKTooLarge:
      return kExitConfig;
    default:
      return kExitPipeline;
  }
}

std::vector<Camera> parse_cameras(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_array()) throw Error(ErrorCode::kUnsupportedFormat, "cameras file must hold a JSON array");
  auto vec3 = [](const json& v, const char* what) {
    if (!v.is_array() || v.size() != 3) {
      throw Error(ErrorCode::kUnsupportedFormat, std::string("camera ") + what + " must be [x, y, z]");
    }
    return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  };
  std::vector<Camera> cameras;
  for (const json& c : j) {
    if (!c.is_object() || !c.contains("center") || !c.contains("forward")) {
      throw Error(ErrorCode::kUnsupportedFormat, "camera entries need center and forward");
    }
    Camera cam;
    cam.center = vec3(c["center"], "center");
    const Vec3 forward = vec3(c["forward"], "forward");
    if (!(forward.norm() > 0.0)) throw Error(ErrorCode::kUnsupportedFormat, "camera forward is zero");
    cam.forward = forward.normalized();
    cameras.push_back(cam);
  }
  return cameras;
}

std::filesystem::path sweep_path(const std::filesystem::path& base, double ratio) {
  char suffix[16];
  std::snprintf(suffix, sizeof(suffix), "_r%02lld", std::llround(ratio * 100.0));
  std::filesystem::path out = base;
  out.replace_filename(base.stem().string() + suffix + base.extension().string());
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"One-shot, camera-free pruning of Gaussian splat PLY files", "splatprune"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);
  CLI::Option* root_config = app.set_config("--config-file")->group("");

  CLI::App* prune = app.add_subcommand("prune", "Score a scene once and drop a fraction of its splats");
  add_common(prune, o, root_config);
  add_pipeline(prune, o);
  prune->add_option("--output,-o", o.output, "Pruned PLY")->required();
  prune->add_option("--report", o.report, "Optional report JSON");
  o.ratio_opt = prune->add_option("--ratio", o.ratio, "Fraction of splats to remove")
                    ->default_str("");
  o.tau_opt = prune->add_option("--tau", o.tau, "Remove splats scoring below this value")
                  ->default_str("");
  prune->add_flag("--report-timings", o.report_timings, "Record wall-clock stage timings in the report");

  CLI::App* sweep = app.add_subcommand("sweep", "Score once, prune at several ratios");
  add_common(sweep, o, root_config);
  add_pipeline(sweep, o);
  sweep->add_option("--output,-o", o.output, "Base PLY path; outputs gain a _rXX suffix")->required();
  sweep->add_option("--report", o.report, "Optional base report path, suffixed like the outputs");
  sweep->add_option("--ratios", o.ratios, "Comma-separated ratios")->delimiter(',');
  sweep->add_flag("--report-timings", o.report_timings, "Record wall-clock stage timings in the report");

  CLI::App* describe = app.add_subcommand("describe", "Dump per-voxel descriptors, statistics and evidence");
  add_common(describe, o, root_config);
  add_pipeline(describe, o);
  describe->add_option("--output,-o", o.output, "JSON-lines file (default: stdout)");

  CLI::App* synth = app.add_subcommand("synth", "Write a labeled synthetic test scene");
  add_common(synth, o, root_config);
  synth->add_option("--output,-o", o.output, "Output PLY")->required();
  synth->add_option("--labels", o.labels, "Optional labels sidecar JSON");
  synth->add_option("--n-plane", o.n_plane, "Splats on the redundant plane");
  synth->add_option("--n-rod", o.n_rod, "Splats on the thin curve");
  synth->add_option("--noise", o.noise, "Position jitter (scene units)");
  synth->add_option("--seed", o.seed, "Random seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigSyntaxError& e) {
    err << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const CLI::ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitParse;
  }

  try {
    set_thread_count(o.threads);
    if (prune->parsed()) return cmd_prune(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (describe->parsed()) return cmd_describe(o, out);
    return cmd_synth(o);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitPipeline;
  }
}

}  // namespace splatprune::cli
