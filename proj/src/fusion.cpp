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

#include "vmad/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vmad/detect.hpp"
#include "vmad/error.hpp"

namespace vmad {

std::string_view to_string(FusionScheme scheme) {
  return scheme == FusionScheme::Grouped ? "grouped" : "layer_to_layer";
}

FusionScheme parse_fusion_scheme(std::string_view name) {
  if (name == "grouped") return FusionScheme::Grouped;
  if (name == "layer_to_layer") return FusionScheme::LayerToLayer;
  fail(ErrorKind::InvalidArgument,
       "unknown fusion scheme '" + std::string(name) + "' (expected grouped or layer_to_layer)");
}

void FusionSpec::validate() const {
  require(!groups.empty(), ErrorKind::InvalidArgument, "fusion needs at least one group");
  std::set<int> seen;
  for (const auto& g : groups) {
    require(!g.empty(), ErrorKind::InvalidArgument, "fusion groups must be non-empty");
    for (int idx : g) {
      require(idx >= 1, ErrorKind::InvalidArgument,
              "layer indices are 1-based, got " + std::to_string(idx));
      require(seen.insert(idx).second, ErrorKind::InvalidArgument,
              "layer " + std::to_string(idx) + " appears in more than one fusion group");
    }
  }
}

std::vector<std::vector<int>> FusionSpec::effective_groups() const {
  if (scheme == FusionScheme::Grouped) return groups;
  std::vector<std::vector<int>> singles;
  for (const auto& g : groups) {
    for (int idx : g) singles.push_back({idx});
  }
  return singles;
}

std::vector<int> FusionSpec::layers() const {
  std::set<int> all;
  for (const auto& g : groups) all.insert(g.begin(), g.end());
  return {all.begin(), all.end()};
}

std::vector<int> default_layer_selection(int depth) {
  require(depth >= 2, ErrorKind::InvalidArgument,
          "layer selection needs depth >= 2, got " + std::to_string(depth));
  const int drop = depth / 6;
  std::vector<int> out;
  for (int i = drop + 1; i <= depth - drop; ++i) out.push_back(i);
  return out;
}

std::vector<FusedPatches> fuse_groups(const FeatureStack& stack, const FusionSpec& spec) {
  spec.validate();
  stack.validate();
  const std::size_t gh = stack.grid_h(), gw = stack.grid_w(), dim = stack.dim();
  const std::size_t patches = gh * gw;

  std::vector<FusedPatches> out;
  const auto groups = spec.effective_groups();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<const LayerFeatures*> members;
    for (int idx : groups[g]) members.push_back(&stack.layer(idx));
    const double scale = 1.0 / std::sqrt(static_cast<double>(members.size()));

    Matrix fused(patches, dim * members.size());
    for (std::size_t p = 0; p < patches; ++p) {
      auto row = fused.row(p);
      for (std::size_t m = 0; m < members.size(); ++m) {
        const float* v = members[m]->values.data().data() + p * dim;
        double sq = 0.0;
        for (std::size_t d = 0; d < dim; ++d) sq += static_cast<double>(v[d]) * v[d];
        const double inv = sq > 0.0 ? scale / std::sqrt(sq) : 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          row[m * dim + d] = static_cast<float>(v[d] * inv);
        }
      }
    }
    out.push_back({g, gh, gw, std::move(fused)});
  }
  return out;
}

std::vector<Tensor> layer_to_layer_maps(const FeatureStack& query,
                                        const std::map<int, Matrix>& memory) {
  std::vector<int> layers;
  for (const auto& l : query.layers) layers.push_back(l.layer_index);
  std::vector<int> mem_layers;
  for (const auto& [idx, m] : memory) mem_layers.push_back(idx);
  require(layers == mem_layers, ErrorKind::InvalidArgument,
          "layer-to-layer comparison needs the same layers on both sides");

  FusionSpec singles{FusionScheme::LayerToLayer, {layers}};
  const auto fused = fuse_groups(query, singles);
  std::vector<Tensor> maps;
  for (std::size_t i = 0; i < fused.size(); ++i) {
    maps.push_back(group_anomaly_map(fused[i], memory.at(layers[i])));
  }
  return maps;
}

Tensor mean_maps(const std::vector<Tensor>& maps) {
  require(!maps.empty(), ErrorKind::InvalidArgument, "no maps to average");
  Tensor out = maps.front();
  for (std::size_t i = 1; i < maps.size(); ++i) {
    require(maps[i].dims() == out.dims(), ErrorKind::ShapeMismatch,
            "cannot average maps of shape " + shape_string(maps[i].dims()) + " and " +
                shape_string(out.dims()));
    auto dst = out.data();
    auto src = maps[i].data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  if (maps.size() > 1) {
    const float inv = 1.0f / static_cast<float>(maps.size());
    for (float& v : out.data()) v *= inv;
  }
  return out;
}

}  // namespace vmad
