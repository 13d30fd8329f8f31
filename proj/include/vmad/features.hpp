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
#include <string>
#include <vector>

#include "vmad/tensor.hpp"

namespace vmad {

/// Patch grid of one transformer layer. values has shape [grid_h, grid_w, dim].
/// layer_index is 1-based, matching "layer_NN" in feature files.
struct LayerFeatures {
  int layer_index = 0;
  Tensor values;

  std::size_t grid_h() const { return values.dim(0); }
  std::size_t grid_w() const { return values.dim(1); }
  std::size_t dim() const { return values.dim(2); }

  bool operator==(const LayerFeatures&) const = default;
};

/// Per-image bundle of selected layer grids plus the global class token.
struct FeatureStack {
  std::vector<LayerFeatures> layers;  // strictly increasing layer_index
  std::vector<float> cls_token;
  std::string backbone_id;

  /// Throws ShapeMismatch/InvalidArgument when the invariants do not hold.
  void validate() const;

  std::size_t grid_h() const { return layers.front().grid_h(); }
  std::size_t grid_w() const { return layers.front().grid_w(); }
  std::size_t dim() const { return layers.front().dim(); }

  bool has_layer(int index) const;
  /// Throws NotFound naming the layer when absent.
  const LayerFeatures& layer(int index) const;

  /// Copy restricted to `indices` (any order; result is sorted).
  FeatureStack select(const std::vector<int>& indices) const;

  bool operator==(const FeatureStack&) const = default;
};

std::string layer_tensor_name(int index);

void write_feature_file(const std::filesystem::path& path, const FeatureStack& stack);
FeatureStack read_feature_file(const std::filesystem::path& path);

}  // namespace vmad
