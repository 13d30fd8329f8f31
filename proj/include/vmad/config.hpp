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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "vmad/augment.hpp"
#include "vmad/extractor.hpp"
#include "vmad/fusion.hpp"
#include "vmad/image.hpp"

namespace vmad {

/// Ablation switches: support augmentation, pseudo multi-view transforms
/// and category-indexed banks (off = one mixed bank, no category routing).
struct AblationToggles {
  bool support_aug = true;
  bool pmvt = true;
  bool cimb = true;

  bool operator==(const AblationToggles&) const = default;
};

struct EngineConfig {
  BackendConfig backend;
  std::optional<std::string> backbone_id;  // when set, features must carry this id
  PreprocessSpec preprocess;
  FusionSpec fusion;
  AugmentationPlan plan = AugmentationPlan::defaults();
  AblationToggles ablation;
  std::size_t eval_resolution = 256;

  /// The plan after ablation toggles: no support augs without SA, identity
  /// view only without PMVT.
  AugmentationPlan effective_plan() const;
  void validate() const;
};

/// Parses and schema-checks a config object. Unknown keys, wrong types and
/// out-of-range values are InvalidArgument errors naming the offending key.
EngineConfig parse_engine_config(const nlohmann::json& j);
EngineConfig load_engine_config(const std::filesystem::path& path);

/// Full effective configuration, every default spelled out.
nlohmann::json to_json(const EngineConfig& config);

nlohmann::json to_json(const PreprocessSpec& spec);
nlohmann::json to_json(const FusionSpec& spec);
nlohmann::json to_json(const AugmentationPlan& plan);
nlohmann::json to_json(const BackendConfig& backend);
PreprocessSpec parse_preprocess(const nlohmann::json& j);
FusionSpec parse_fusion(const nlohmann::json& j);
AugmentationPlan parse_plan(const nlohmann::json& support_augs, const nlohmann::json& views);
BackendConfig parse_backend(const nlohmann::json& j);

}  // namespace vmad
