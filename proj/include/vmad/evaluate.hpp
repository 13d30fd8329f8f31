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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmad/bank.hpp"
#include "vmad/config.hpp"
#include "vmad/dataset.hpp"
#include "vmad/extractor.hpp"

namespace vmad {

struct EvalConfig {
  std::filesystem::path dataset_root;
  std::size_t shots = 1;
  std::vector<std::uint64_t> seeds{0};
  EngineConfig engine;
  bool pixel_metrics = true;
  /// Also run the opposite category-indexing setting and report both.
  bool compare_cimb = false;
  double pro_fpr_limit = 0.3;
};

struct MetricRow {
  std::string category;
  std::uint64_t seed = 0;
  double image_auroc = 0.0;
  double image_aupr = 0.0;
  double pixel_auroc = 0.0;
  double pro = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over seeds
};

struct MetricSummary {
  MeanStd image_auroc, image_aupr, pixel_auroc, pro;
};

/// One full sweep over all seeds with a fixed category-indexing setting.
struct EvalRun {
  std::string variant;  // "cimb" or "mixed"
  std::vector<MetricRow> rows;                      // category-major, then seed
  std::map<std::string, MetricSummary> categories;  // over seeds
  MetricSummary mean;  // macro-average over categories per seed, then over seeds
  std::map<std::uint64_t, double> category_accuracy;  // per seed; cimb only
};

struct EvalReport {
  std::size_t shots = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<EvalRun> runs;  // runs[0] follows the configured setting
  std::vector<std::string> warnings;
  nlohmann::json effective_config;
};

/// Support images per category for one seed: `shots` distinct train normals
/// drawn uniformly without replacement from a SplitMix64 stream seeded by
/// (seed, category).
SupportSets sample_supports(const Dataset& dataset, std::size_t shots, std::uint64_t seed);

EvalReport run_evaluation(const EvalConfig& cfg, const FeatureExtractor& extractor);
EvalReport run_evaluation(const EvalConfig& cfg);

/// report.csv (+ report_<variant>.csv per extra run), report.json and
/// effective_config.json inside `dir`.
void write_report(const std::filesystem::path& dir, const EvalReport& report);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_csv(const EvalRun& run);

}  // namespace vmad
