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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vmad/augment.hpp"
#include "vmad/config.hpp"
#include "vmad/extractor.hpp"
#include "vmad/fusion.hpp"
#include "vmad/tensor.hpp"

namespace vmad {

/// Category key used for the single shared bank when category indexing is off.
inline constexpr std::string_view kMixedCategory = "__mixed__";

struct BankKey {
  std::size_t view = 0;
  std::string category;
  std::size_t group = 0;

  auto operator<=>(const BankKey&) const = default;
};

struct CategoryProvenance {
  std::size_t supports = 0;  // support images
  std::size_t variants = 0;  // images banked per view (supports x (1 + augs))

  bool operator==(const CategoryProvenance&) const = default;
};

/// Unit-row patch memories keyed by (view, category, group).
struct PatchBank {
  std::map<BankKey, Matrix> memories;
  std::map<std::string, CategoryProvenance> provenance;

  bool contains(const std::string& category) const { return provenance.count(category) == 1; }
  const Matrix& memory(std::size_t view, const std::string& category, std::size_t group) const;
  std::vector<std::string> categories() const;

  bool operator==(const PatchBank&) const = default;
};

/// One unit-normalized class token per category.
struct GlobalBank {
  std::map<std::string, std::vector<float>> tokens;

  bool operator==(const GlobalBank&) const = default;
};

struct BankManifest {
  std::string backbone_id;
  BackendConfig backend;
  PreprocessSpec preprocess;
  FusionSpec fusion;
  AugmentationPlan plan;  // effective plan (after ablation toggles)
  bool category_indexed = true;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  std::size_t layer_dim = 0;

  nlohmann::json to_json() const;
  static BankManifest from_json(const nlohmann::json& j);

  bool operator==(const BankManifest&) const = default;
};

struct MemoryBanks {
  PatchBank patches;
  GlobalBank globals;
  BankManifest manifest;

  bool operator==(const MemoryBanks&) const = default;
};

/// Support images per category, in a fixed order.
using SupportSets = std::map<std::string, std::vector<ImageSample>>;

struct BankBuildOptions {
  AugmentationPlan plan = AugmentationPlan::defaults();
  FusionSpec fusion;
  PreprocessSpec preprocess;  // recorded in the manifest
  BackendConfig backend;      // recorded in the manifest
  bool category_indexed = true;
  std::uint64_t seed = 0;
};

/// Extracts, fuses and stores every (support variant, view) of every
/// category. Rows are appended in category-name, image, augmentation order
/// regardless of thread count. The global bank holds the class token of one
/// support per category picked with a generator seeded by (seed, category).
/// With category indexing off all rows go to kMixedCategory and the global
/// bank stays empty.
MemoryBanks build_banks(const SupportSets& supports, const BankBuildOptions& options,
                        const FeatureExtractor& extractor);

/// Index of the support whose class token goes into the global bank.
std::size_t pick_global_support(std::uint64_t seed, const std::string& category,
                                std::size_t count);

/// Category whose stored token has the smallest cosine distance to `cls`;
/// ties go to the lexicographically smallest name.
std::string retrieve_category(std::span<const float> cls, const GlobalBank& bank);

void save_bank(const std::filesystem::path& path, const MemoryBanks& banks);
MemoryBanks load_bank(const std::filesystem::path& path);
std::vector<char> serialize_bank(const MemoryBanks& banks);

/// Throws ManifestMismatch describing every field where the detection-time
/// configuration disagrees with the one the bank was built with.
void check_manifest(const BankManifest& manifest, const EngineConfig& config);

}  // namespace vmad
