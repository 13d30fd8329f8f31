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

#include "vmad/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "vmad/detect.hpp"
#include "vmad/error.hpp"
#include "vmad/image.hpp"
#include "vmad/metrics.hpp"
#include "vmad/parallel.hpp"
#include "vmad/rng.hpp"

namespace vmad {
namespace {

using nlohmann::json;

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(v.size()));
  return out;
}

MetricSummary summarize(const std::vector<MetricRow>& rows) {
  std::vector<double> a, b, c, d;
  for (const auto& r : rows) {
    a.push_back(r.image_auroc);
    b.push_back(r.image_aupr);
    c.push_back(r.pixel_auroc);
    d.push_back(r.pro);
  }
  return {mean_std(a), mean_std(b), mean_std(c), mean_std(d)};
}

json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

json to_json(const MetricSummary& s) {
  return {{"image_auroc", to_json(s.image_auroc)},
          {"image_aupr", to_json(s.image_aupr)},
          {"pixel_auroc", to_json(s.pixel_auroc)},
          {"pro", to_json(s.pro)}};
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << text;
  out.close();
  require(static_cast<bool>(out), ErrorKind::Io, "failed writing " + path.string());
}

struct TestItem {
  const Sample* sample;
};

struct ScoredItem {
  std::string predicted;
  double image_score = 0.0;
  Tensor map;
};

EvalRun evaluate_variant(const EvalConfig& cfg, const Dataset& ds, const FeatureExtractor& extractor,
                         bool category_indexed, const std::vector<TestItem>& items,
                         const std::vector<Tensor>& masks, std::vector<std::string>& warnings) {
  EvalRun run;
  run.variant = category_indexed ? "cimb" : "mixed";
  const std::size_t res = cfg.engine.eval_resolution;

  std::map<std::string, std::vector<MetricRow>> per_category;
  std::map<std::uint64_t, std::vector<MetricRow>> per_seed;
  for (std::uint64_t seed : cfg.seeds) {
    BankBuildOptions options;
    options.plan = cfg.engine.effective_plan();
    options.fusion = cfg.engine.fusion;
    options.preprocess = cfg.engine.preprocess;
    options.backend = cfg.engine.backend;
    options.category_indexed = category_indexed;
    options.seed = seed;
    const MemoryBanks banks = build_banks(sample_supports(ds, cfg.shots, seed), options, extractor);
    const Detector detector(banks, extractor, res, res);

    std::vector<ScoredItem> scored(items.size());
    parallel_for(items.size(), [&](std::size_t i) {
      const Sample& s = *items[i].sample;
      PixelScores px;
      try {
        px = detector.score_pixels(ImageSample{s.path, std::nullopt});
      } catch (const Error& e) {
        fail(e.kind(), "scoring " + s.path.string() + ": " + e.what());
      }
      scored[i].predicted = px.category;
      scored[i].image_score = score_image(px.map);
      scored[i].map = std::move(px.map);
    });

    std::size_t correct = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (scored[i].predicted == items[i].sample->category) ++correct;
    }
    if (category_indexed && !items.empty()) {
      run.category_accuracy[seed] = static_cast<double>(correct) / static_cast<double>(items.size());
    }

    for (const auto& [name, data] : ds.categories) {
      std::vector<float> scores;
      std::vector<std::uint8_t> labels;
      std::vector<Tensor> maps, gts;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].sample->category != name) continue;
        scores.push_back(static_cast<float>(scored[i].image_score));
        labels.push_back(items[i].sample->anomalous ? 1 : 0);
        if (cfg.pixel_metrics) {
          maps.push_back(scored[i].map);
          gts.push_back(masks[i]);
        }
      }
      const auto positives = std::count(labels.begin(), labels.end(), 1);
      if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) continue;

      MetricRow row;
      row.category = name;
      row.seed = seed;
      row.image_auroc = auroc(scores, labels);
      row.image_aupr = average_precision(scores, labels);
      if (cfg.pixel_metrics) {
        row.pixel_auroc = pixel_auroc(maps, gts);
        row.pro = pro_score(maps, gts, cfg.pro_fpr_limit);
      }
      per_category[name].push_back(row);
      per_seed[seed].push_back(row);
    }
  }

  for (const auto& [name, data] : ds.categories) {
    if (per_category.count(name) == 0 && !data.test.empty()) {
      const std::string w = "category '" + name + "' lacks normal or anomalous test samples; excluded from metrics";
      if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
    }
  }
  for (const auto& [name, rows] : per_category) {
    run.rows.insert(run.rows.end(), rows.begin(), rows.end());
    run.categories[name] = summarize(rows);
  }
  // Macro-average over categories for each seed, then mean/std over seeds.
  std::vector<MetricRow> seed_means;
  for (const auto& [seed, rows] : per_seed) {
    const MetricSummary s = summarize(rows);
    seed_means.push_back({"mean", seed, s.image_auroc.mean, s.image_aupr.mean, s.pixel_auroc.mean,
                          s.pro.mean});
  }
  run.mean = summarize(seed_means);
  return run;
}

}  // namespace

SupportSets sample_supports(const Dataset& dataset, std::size_t shots, std::uint64_t seed) {
  require(shots >= 1, ErrorKind::InvalidArgument, "shots must be at least 1");
  SupportSets out;
  for (const auto& [name, data] : dataset.categories) {
    require(shots <= data.train_normals.size(), ErrorKind::InvalidArgument,
            "category '" + name + "' has " + std::to_string(data.train_normals.size()) +
                " train/good images, fewer than the requested " + std::to_string(shots) + " shots");
    SplitMix64 rng = category_stream(seed, name, "support-sampling");
    for (std::size_t idx : sample_without_replacement(rng, data.train_normals.size(), shots)) {
      out[name].push_back(ImageSample{data.train_normals[idx], std::nullopt});
    }
  }
  return out;
}

EvalReport run_evaluation(const EvalConfig& cfg, const FeatureExtractor& extractor) {
  cfg.engine.validate();
  require(!cfg.seeds.empty(), ErrorKind::InvalidArgument, "at least one seed is required");
  require(cfg.shots >= 1, ErrorKind::InvalidArgument, "shots must be at least 1");

  const Dataset ds = ingest_dataset(cfg.dataset_root, cfg.pixel_metrics);
  EvalReport report;
  report.shots = cfg.shots;
  report.seeds = cfg.seeds;
  report.warnings = ds.warnings;
  report.effective_config = to_json(cfg.engine);

  std::vector<TestItem> items;
  for (const auto& [name, data] : ds.categories) {
    for (const auto& s : data.test) items.push_back({&s});
  }

  const std::size_t res = cfg.engine.eval_resolution;
  std::vector<Tensor> masks(items.size());
  if (cfg.pixel_metrics) {
    parallel_for(items.size(), [&](std::size_t i) {
      const Sample& s = *items[i].sample;
      masks[i] = s.mask_path ? preprocess_mask(load_mask(*s.mask_path), cfg.engine.preprocess, res)
                             : Tensor({res, res}, 0.0f);
    });
  }

  report.runs.push_back(
      evaluate_variant(cfg, ds, extractor, cfg.engine.ablation.cimb, items, masks, report.warnings));
  if (cfg.compare_cimb) {
    report.runs.push_back(evaluate_variant(cfg, ds, extractor, !cfg.engine.ablation.cimb, items,
                                           masks, report.warnings));
  }
  return report;
}

EvalReport run_evaluation(const EvalConfig& cfg) {
  BackendConfig backend = cfg.engine.backend;
  if (backend.kind == "files" && backend.features_root && !backend.dataset_root) {
    backend.dataset_root = cfg.dataset_root;
  }
  const auto extractor = make_extractor(backend, cfg.engine.preprocess);
  return run_evaluation(cfg, *extractor);
}

std::string report_csv(const EvalRun& run) {
  std::string out = "category,seed,image_auroc,image_aupr,pixel_auroc,pro\n";
  for (const auto& r : run.rows) {
    out += r.category + "," + std::to_string(r.seed) + "," + fixed6(r.image_auroc) + "," +
           fixed6(r.image_aupr) + "," + fixed6(r.pixel_auroc) + "," + fixed6(r.pro) + "\n";
  }
  return out;
}

json report_to_json(const EvalReport& report) {
  json runs = json::array();
  for (const auto& run : report.runs) {
    json rows = json::array();
    for (const auto& r : run.rows) {
      rows.push_back({{"category", r.category},
                      {"seed", r.seed},
                      {"image_auroc", r.image_auroc},
                      {"image_aupr", r.image_aupr},
                      {"pixel_auroc", r.pixel_auroc},
                      {"pro", r.pro}});
    }
    json categories = json::object();
    for (const auto& [name, s] : run.categories) categories[name] = to_json(s);
    json entry{{"variant", run.variant},
               {"multi_class_mixed_bank", run.variant == "mixed"},
               {"rows", rows},
               {"categories", categories},
               {"mean", to_json(run.mean)}};
    if (!run.category_accuracy.empty()) {
      json acc = json::object();
      for (const auto& [seed, a] : run.category_accuracy) acc[std::to_string(seed)] = a;
      entry["category_accuracy"] = acc;
    }
    runs.push_back(entry);
  }
  return {{"shots", report.shots},
          {"seeds", report.seeds},
          {"runs", runs},
          {"warnings", report.warnings},
          {"config", report.effective_config}};
}

void write_report(const std::filesystem::path& dir, const EvalReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create report directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const std::string name = i == 0 ? "report.csv" : "report_" + report.runs[i].variant + ".csv";
    write_text(dir / name, report_csv(report.runs[i]));
  }
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "effective_config.json", report.effective_config.dump(2) + "\n");
}

}  // namespace vmad
