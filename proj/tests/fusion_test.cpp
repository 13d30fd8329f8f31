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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vmad/detect.hpp"
#include "vmad/error.hpp"
#include "vmad/fusion.hpp"
#include "vmad/kernels.hpp"

namespace vmad {
namespace {

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

TEST(DefaultLayerSelection, DropsSixthFromEachEnd) {
  EXPECT_EQ(default_layer_selection(12), range(3, 10));
  EXPECT_EQ(default_layer_selection(2), range(1, 2));
  EXPECT_EQ(default_layer_selection(24), range(5, 20));
  EXPECT_THROW(default_layer_selection(1), Error);
}

TEST(FusionSpec, Validation) {
  FusionSpec spec;
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(spec.layers(), range(3, 10));
  spec.groups = {{3, 4}, {4, 5}};
  EXPECT_THROW(spec.validate(), Error);
  spec.groups = {{}};
  EXPECT_THROW(spec.validate(), Error);
  spec.groups = {{0, 1}};
  EXPECT_THROW(spec.validate(), Error);
  spec.groups = {{3, 6}, {9, 12}};
  spec.scheme = FusionScheme::LayerToLayer;
  EXPECT_EQ(spec.effective_groups(), (std::vector<std::vector<int>>{{3}, {6}, {9}, {12}}));
}

TEST(FuseGroups, SingleLayerIsNormalizedLayer) {
  std::mt19937_64 rng(1);
  const FeatureStack s = testing::random_stack(rng, {4}, 3, 2, 5);
  const auto fused = fuse_groups(s, FusionSpec{FusionScheme::Grouped, {{4}}});
  ASSERT_EQ(fused.size(), 1u);
  const Matrix expected =
      l2_normalize_rows(Matrix(6, 5, {s.layers[0].values.data().begin(), s.layers[0].values.data().end()}));
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(fused[0].matrix.at(r, c), expected.at(r, c), 1e-7);
  }
}

TEST(FuseGroups, BasisVectorsConcatenate) {
  FeatureStack s;
  s.backbone_id = "m";
  s.layers.push_back({1, Tensor({1, 1, 2}, {1.0f, 0.0f})});
  s.layers.push_back({2, Tensor({1, 1, 2}, {0.0f, 1.0f})});
  s.cls_token = {1.0f, 0.0f};
  const auto fused = fuse_groups(s, FusionSpec{FusionScheme::Grouped, {{1, 2}}});
  const float r = 1.0f / std::sqrt(2.0f);
  EXPECT_EQ(fused[0].matrix, Matrix(1, 4, {r, 0.0f, 0.0f, r}));
}

TEST(FuseGroups, DotIsMeanOfLayerCosines) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureStack a = testing::random_stack(rng, {1, 2}, 2, 2, 6);
    const FeatureStack b = testing::random_stack(rng, {1, 2}, 2, 2, 6);
    const FusionSpec spec{FusionScheme::Grouped, {{1, 2}}};
    const Matrix fa = fuse_groups(a, spec)[0].matrix, fb = fuse_groups(b, spec)[0].matrix;
    for (std::size_t p = 0; p < 4; ++p) {
      double cos_sum = 0.0;
      for (int l = 0; l < 2; ++l) {
        const auto va = a.layers[l].values.data().subspan(p * 6, 6);
        const auto vb = b.layers[l].values.data().subspan(p * 6, 6);
        cos_sum += testing::cosine(va, vb);
      }
      EXPECT_NEAR(testing::dot(fa.row(p), fb.row(p)), 0.5 * cos_sum, 1e-6);
    }
  }
}

TEST(FuseGroups, UnknownLayerIsError) {
  std::mt19937_64 rng(3);
  const FeatureStack s = testing::random_stack(rng, {1, 2}, 2, 2, 3);
  EXPECT_THROW(fuse_groups(s, FusionSpec{FusionScheme::Grouped, {{1, 5}}}), Error);
}

TEST(FuseGroups, ZeroLayerContributesZeros) {
  FeatureStack s;
  s.backbone_id = "m";
  s.layers.push_back({1, Tensor({1, 1, 2}, {0.0f, 0.0f})});
  s.layers.push_back({2, Tensor({1, 1, 2}, {0.0f, 0.0f})});
  s.cls_token = {1.0f};
  const auto fused = fuse_groups(s, FusionSpec{FusionScheme::Grouped, {{1, 2}}});
  for (float v : fused[0].matrix.data()) EXPECT_EQ(v, 0.0f);
}

TEST(FuseGroups, PermutingLayersKeepsSimilarities) {
  std::mt19937_64 rng(4);
  const FeatureStack a = testing::random_stack(rng, {1, 2, 3}, 3, 3, 4);
  const FeatureStack b = testing::random_stack(rng, {1, 2, 3}, 3, 3, 4);
  const FusionSpec s1{FusionScheme::Grouped, {{1, 2, 3}}}, s2{FusionScheme::Grouped, {{3, 1, 2}}};
  const Matrix x = similarity_matmul(fuse_groups(a, s1)[0].matrix, fuse_groups(b, s1)[0].matrix);
  const Matrix y = similarity_matmul(fuse_groups(a, s2)[0].matrix, fuse_groups(b, s2)[0].matrix);
  for (std::size_t i = 0; i < x.data().size(); ++i) EXPECT_NEAR(x.data()[i], y.data()[i], 1e-6);
}

std::map<int, Matrix> layer_memory(const FeatureStack& s) {
  std::map<int, Matrix> out;
  for (const auto& l : s.layers) {
    const std::size_t n = l.grid_h() * l.grid_w();
    out[l.layer_index] =
        l2_normalize_rows(Matrix(n, l.dim(), {l.values.data().begin(), l.values.data().end()}));
  }
  return out;
}

TEST(LayerToLayer, SingletonGroupsMatchGrouped) {
  std::mt19937_64 rng(5);
  const FeatureStack q = testing::random_stack(rng, {3, 6}, 4, 4, 5);
  const FeatureStack m = testing::random_stack(rng, {3, 6}, 4, 4, 5);
  const auto maps = layer_to_layer_maps(q, layer_memory(m));
  ASSERT_EQ(maps.size(), 2u);
  const FusionSpec singles{FusionScheme::Grouped, {{3}, {6}}};
  const auto fq = fuse_groups(q, singles), fm = fuse_groups(m, singles);
  for (std::size_t g = 0; g < 2; ++g) {
    EXPECT_EQ(group_anomaly_map(fq[g], fm[g].matrix), maps[g]);
  }
}

TEST(LayerToLayer, SelfMatchIsZeroAndOracleAgrees) {
  std::mt19937_64 rng(6);
  const FeatureStack q = testing::random_stack(rng, {1, 2}, 3, 3, 4);
  for (const Tensor& m : layer_to_layer_maps(q, layer_memory(q))) {
    for (float v : m.data()) EXPECT_NEAR(v, 0.0f, 1e-6);
  }
  const FeatureStack mem = testing::random_stack(rng, {1, 2}, 5, 2, 4);
  const auto memory = layer_memory(mem);
  const auto maps = layer_to_layer_maps(q, memory);
  for (std::size_t l = 0; l < 2; ++l) {
    const Matrix qm = layer_memory(q).at(int(l + 1));
    const auto ref = testing::nn_scan_scores(qm, memory.at(int(l + 1)));
    for (std::size_t p = 0; p < ref.size(); ++p) EXPECT_NEAR(maps[l].data()[p], ref[p], 1e-6);
  }
}

TEST(LayerToLayer, LayerMismatchIsError) {
  std::mt19937_64 rng(7);
  const FeatureStack q = testing::random_stack(rng, {1, 2}, 2, 2, 3);
  const FeatureStack m = testing::random_stack(rng, {1, 3}, 2, 2, 3);
  EXPECT_THROW(layer_to_layer_maps(q, layer_memory(m)), Error);
}

TEST(MeanMaps, Averages) {
  const Tensor m = mean_maps({Tensor({1, 2}, {1.0f, 2.0f}), Tensor({1, 2}, {3.0f, 6.0f})});
  EXPECT_EQ(m, Tensor({1, 2}, {2.0f, 4.0f}));
  EXPECT_THROW(mean_maps({}), Error);
}

}  // namespace
}  // namespace vmad
