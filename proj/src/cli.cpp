// Copyright 2026 The vmad Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vmad/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "vmad/bank.hpp"
#include "vmad/config.hpp"
#include "vmad/dataset.hpp"
#include "vmad/detect.hpp"
#include "vmad/error.hpp"
#include "vmad/evaluate.hpp"
#include "vmad/image.hpp"
#include "vmad/parallel.hpp"
#include "vmad/synthetic.hpp"

namespace vmad::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Toggles {
  bool no_sa = false;
  bool no_pmvt = false;
  bool no_cimb = false;

  void add_to(CLI::App* cmd) {
    cmd->add_flag("--no-sa", no_sa, "Disable support-set augmentation");
    cmd->add_flag("--no-pmvt", no_pmvt, "Disable pseudo multi-view transforms (identity view only)");
    cmd->add_flag("--no-cimb", no_cimb, "Use one mixed bank without category routing");
  }

  void apply(EngineConfig& cfg) const {
    if (no_sa) cfg.ablation.support_aug = false;
    if (no_pmvt) cfg.ablation.pmvt = false;
    if (no_cimb) cfg.ablation.cimb = false;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void apply_threads(const std::optional<std::size_t>& flag) {
  if (flag) {
    set_num_threads(*flag);
    return;
  }
  if (const char* env = std::getenv("VAD_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long long n = std::strtoull(env, &end, 10);
    require(end && *end == '\0', ErrorKind::InvalidArgument,
            std::string("VAD_THREADS must be a non-negative integer, got '") + env + "'");
    set_num_threads(static_cast<std::size_t>(n));
    return;
  }
  set_num_threads(0);
}

EngineConfig load_config(const std::optional<fs::path>& path) {
  return path ? load_engine_config(*path) : EngineConfig{};
}

/// Relative feature files resolve against the dataset unless the config says otherwise.
void default_dataset_root(EngineConfig& cfg, const fs::path& dataset) {
  if (cfg.backend.kind == "files" && cfg.backend.features_root && !cfg.backend.dataset_root) {
    cfg.backend.dataset_root = dataset;
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    require(!item.empty() && item.find_first_not_of("0123456789") == std::string::npos,
            ErrorKind::InvalidArgument, "--seeds must be a comma-separated list of integers");
    seeds.push_back(std::stoull(item));
    pos = comma + 1;
  }
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          ErrorKind::InvalidArgument, "--seeds contains duplicates");
  return seeds;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(f), ErrorKind::Io, "cannot write " + path.string());
  f << text;
  f.close();
  require(static_cast<bool>(f), ErrorKind::Io, "failed writing " + path.string());
}

struct MapRange {
  float lo = 0.0f;
  float hi = 0.0f;
};

MapRange map_range(const Tensor& map) {
  const auto [lo, hi] = std::minmax_element(map.data().begin(), map.data().end());
  return {*lo, *hi};
}

/// Min-max normalized per image; a constant map is written as all zeros.
void write_heatmap(const fs::path& path, const Tensor& map, MapRange range) {
  const float span = range.hi - range.lo;
  std::vector<std::uint8_t> px(map.size(), 0);
  if (span > 0.0f) {
    const auto v = map.data();
    for (std::size_t i = 0; i < px.size(); ++i) {
      px[i] = static_cast<std::uint8_t>(std::lround((v[i] - range.lo) / span * 255.0f));
    }
  }
  write_gray_png(path, map.dim(0), map.dim(1), px);
}

// ---- build-bank ----------------------------------------------------------

struct BuildBankArgs {
  std::optional<fs::path> config;
  fs::path dataset;
  std::size_t shots = 1;
  std::uint64_t seed = 0;
  fs::path out;
  std::optional<std::size_t> threads;
  Toggles toggles;
};

void cmd_build_bank(const BuildBankArgs& a, std::ostream& out) {
  apply_threads(a.threads);
  EngineConfig cfg = load_config(a.config);
  a.toggles.apply(cfg);
  default_dataset_root(cfg, a.dataset);
  cfg.validate();

  const Dataset ds = ingest_dataset(a.dataset, false);
  const auto extractor = make_extractor(cfg.backend, cfg.preprocess);

  BankBuildOptions options;
  options.plan = cfg.effective_plan();
  options.fusion = cfg.fusion;
  options.preprocess = cfg.preprocess;
  options.backend = cfg.backend;
  options.category_indexed = cfg.ablation.cimb;
  options.seed = a.seed;
  const MemoryBanks banks = build_banks(sample_supports(ds, a.shots, a.seed), options, *extractor);
  if (cfg.backbone_id && *cfg.backbone_id != banks.manifest.backbone_id) {
    fail(ErrorKind::ManifestMismatch, "features come from backbone '" +
                                          banks.manifest.backbone_id + "' but the config requires '" +
                                          *cfg.backbone_id + "'");
  }

  save_bank(a.out, banks);
  fs::path manifest_path = a.out;
  manifest_path += ".manifest.json";
  write_text(manifest_path, banks.manifest.to_json().dump(2) + "\n");

  for (const auto& w : ds.warnings) out << "warning: " << w << "\n";
  out << "category supports variants_per_view rows_per_view\n";
  for (const auto& [name, prov] : banks.patches.provenance) {
    out << name << " " << prov.supports << " " << prov.variants << " "
        << banks.patches.memory(0, name, 0).rows() << "\n";
  }
  out << "wrote " << a.out.string() << "\n";
}

// ---- detect ----------------------------------------------------------------

struct DetectArgs {
  fs::path bank;
  fs::path image;
  std::optional<fs::path> heatmap;
  std::optional<fs::path> json_out;
  std::optional<fs::path> config;
  std::optional<std::size_t> resolution;
  std::optional<std::size_t> threads;
};

void cmd_detect(const DetectArgs& a, std::ostream& out) {
  apply_threads(a.threads);
  const MemoryBanks banks = load_bank(a.bank);
  std::size_t resolution = 256;
  if (a.config) {
    const EngineConfig cfg = load_engine_config(*a.config);
    check_manifest(banks.manifest, cfg);
    resolution = cfg.eval_resolution;
  }
  if (a.resolution) resolution = *a.resolution;

  const auto extractor = make_extractor(banks.manifest.backend, banks.manifest.preprocess);
  const Detector detector(banks, *extractor, resolution, resolution);
  const DetectionResult r = detector.detect(ImageSample{a.image, std::nullopt});

  out << "category: " << r.category << "\n";
  out << "image_score: " << fmt("%.6f", r.image_score) << "\n";
  out.flush();

  const MapRange range = map_range(r.map);
  if (a.heatmap) write_heatmap(*a.heatmap, r.map, range);
  if (a.json_out) {
    json j{{"image", a.image.string()},
           {"category", r.category},
           {"image_score", r.image_score},
           {"map_min", range.lo},
           {"map_max", range.hi},
           {"resolution", resolution}};
    if (a.heatmap) j["heatmap"] = a.heatmap->string();
    write_text(*a.json_out, j.dump(2) + "\n");
  }
}

// ---- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::optional<fs::path> config;
  fs::path dataset;
  std::size_t shots = 1;
  std::string seeds = "0";
  fs::path out;
  std::optional<std::size_t> threads;
  Toggles toggles;
  bool compare_cimb = false;
  bool no_pixel = false;
};

void print_mean(std::ostream& out, const EvalRun& run) {
  const auto cell = [](const MeanStd& m) {
    return fmt("%.3f", m.mean) + " +- " + fmt("%.3f", m.std);
  };
  out << run.variant << " mean: image_auroc " << cell(run.mean.image_auroc) << " | image_aupr "
      << cell(run.mean.image_aupr) << " | pixel_auroc " << cell(run.mean.pixel_auroc) << " | pro "
      << cell(run.mean.pro) << "\n";
}

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  apply_threads(a.threads);
  EvalConfig cfg;
  cfg.engine = load_config(a.config);
  a.toggles.apply(cfg.engine);
  default_dataset_root(cfg.engine, a.dataset);
  cfg.engine.validate();
  cfg.dataset_root = a.dataset;
  cfg.shots = a.shots;
  cfg.seeds = parse_seeds(a.seeds);
  cfg.compare_cimb = a.compare_cimb;
  cfg.pixel_metrics = !a.no_pixel;

  const EvalReport report = run_evaluation(cfg);
  write_report(a.out, report);
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  for (const auto& run : report.runs) print_mean(out, run);
  out << "wrote " << (a.out / "report.csv").string() << "\n";
}

// ---- synth / config ----------------------------------------------------------

void cmd_synth(const fs::path& out_dir, std::uint64_t seed, std::ostream& out) {
  SyntheticSpec spec;
  spec.seed = seed;
  write_synthetic_dataset(out_dir, spec);
  out << "wrote synthetic dataset to " << out_dir.string() << "\n";
}

void cmd_config(const std::optional<fs::path>& path, const Toggles& toggles, std::ostream& out) {
  EngineConfig cfg = load_config(path);
  toggles.apply(cfg);
  cfg.validate();
  out << to_json(cfg).dump(2) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot visual anomaly detection with patch memory banks"};
  app.name("vmad");
  app.require_subcommand(1);

  BuildBankArgs bb;
  auto* build = app.add_subcommand("build-bank", "Build memory banks from K support images");
  build->add_option("--config", bb.config, "Engine config JSON");
  build->add_option("--dataset", bb.dataset, "Dataset root")->required();
  build->add_option("--shots", bb.shots, "Support images per category")->check(CLI::PositiveNumber);
  build->add_option("--seed", bb.seed, "Support sampling seed");
  build->add_option("--out", bb.out, "Output bank file (.vadb)")->required();
  build->add_option("--threads", bb.threads, "Worker threads (0 = all cores)");
  bb.toggles.add_to(build);

  DetectArgs dt;
  auto* detect = app.add_subcommand("detect", "Score one image against a bank");
  detect->add_option("--bank", dt.bank, "Bank file (.vadb)")->required();
  detect->add_option("--image", dt.image, "Image or feature file")->required();
  detect->add_option("--heatmap", dt.heatmap, "Write the anomaly map as a PNG");
  detect->add_option("--json", dt.json_out, "Write a JSON sidecar");
  detect->add_option("--config", dt.config, "Refuse to run unless the bank matches this config");
  detect->add_option("--resolution", dt.resolution, "Anomaly map resolution")
      ->check(CLI::PositiveNumber);
  detect->add_option("--threads", dt.threads, "Worker threads (0 = all cores)");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate over a dataset and several seeds");
  evaluate->add_option("--config", ev.config, "Engine config JSON");
  evaluate->add_option("--dataset", ev.dataset, "Dataset root")->required();
  evaluate->add_option("--shots", ev.shots, "Support images per category")
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--seeds", ev.seeds, "Comma-separated seeds");
  evaluate->add_option("--out", ev.out, "Report directory")->required();
  evaluate->add_option("--threads", ev.threads, "Worker threads (0 = all cores)");
  ev.toggles.add_to(evaluate);
  evaluate->add_flag("--compare-cimb", ev.compare_cimb,
                     "Also run with the opposite category-indexing setting");
  evaluate->add_flag("--no-pixel-metrics", ev.no_pixel, "Skip pixel AUROC and PRO");

  fs::path synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write the synthetic feature-space benchmark");
  synth->add_option("--out", synth_out, "Output dataset root")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");

  std::optional<fs::path> config_path;
  Toggles config_toggles;
  auto* config = app.add_subcommand("config", "Validate a config and print the effective config");
  config->add_option("--config", config_path, "Engine config JSON");
  config_toggles.add_to(config);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUserError;
  }

  try {
    if (build->parsed()) cmd_build_bank(bb, out);
    if (detect->parsed()) cmd_detect(dt, out);
    if (evaluate->parsed()) cmd_evaluate(ev, out);
    if (synth->parsed()) cmd_synth(synth_out, synth_seed, out);
    if (config->parsed()) cmd_config(config_path, config_toggles, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
  return kExitOk;
}

}  // namespace vmad::cli
