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
#include <map>
#include <string_view>
#include <vector>

#include "vmad/features.hpp"
#include "vmad/tensor.hpp"

namespace vmad {

enum class FusionScheme {
  Grouped,      // each group fused into one search vector
  LayerToLayer  // every listed layer compared on its own, maps averaged
};

std::string_view to_string(FusionScheme scheme);
FusionScheme parse_fusion_scheme(std::string_view name);

/// Layer indices are 1-based.
struct FusionSpec {
  FusionScheme scheme = FusionScheme::Grouped;
  std::vector<std::vector<int>> groups{{3, 4, 5, 6, 7, 8, 9, 10}};

  void validate() const;
  /// Groups actually searched: `groups` for Grouped, one singleton per
  /// listed layer (in listed order) for LayerToLayer.
  std::vector<std::vector<int>> effective_groups() const;
  /// Every layer referenced by the spec, ascending.
  std::vector<int> layers() const;

  bool operator==(const FusionSpec&) const = default;
};

/// Central contiguous band of a `depth`-layer backbone dropping
/// floor(depth / 6) layers at each end, 1-based.
std::vector<int> default_layer_selection(int depth);

/// One fused patch matrix: (grid_h * grid_w) rows of D * |group| columns.
struct FusedPatches {
  std::size_t group_id = 0;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  Matrix matrix;
};

/// For every patch position: unit-normalize each member layer vector,
/// concatenate in group order and scale by 1/sqrt(|group|). The inner
/// product of two fused rows is then the mean of the per-layer cosines.
std::vector<FusedPatches> fuse_groups(const FeatureStack& stack, const FusionSpec& spec);

/// Fusion-after-comparison: one anomaly map per layer, each against the
/// memory of the same layer. `memory` maps layer index -> unit-row matrix.
std::vector<Tensor> layer_to_layer_maps(const FeatureStack& query,
                                        const std::map<int, Matrix>& memory);

/// Arithmetic mean of equally shaped maps.
Tensor mean_maps(const std::vector<Tensor>& maps);

}  // namespace vmad
