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
#include "vmad/error.hpp"
#include "vmad/metrics.hpp"

namespace vmad {
namespace {

using Labels = std::vector<std::uint8_t>;
using Scores = std::vector<float>;

TEST(Auroc, Examples) {
  EXPECT_DOUBLE_EQ(auroc(Scores{0.1f, 0.4f, 0.35f, 0.8f}, Labels{0, 0, 1, 1}), 0.75);
  EXPECT_DOUBLE_EQ(auroc(Scores{0.1f, 0.2f, 0.8f, 0.9f}, Labels{0, 0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(auroc(Scores{0.5f, 0.5f, 0.5f}, Labels{0, 1, 1}), 0.5);
}

TEST(Auroc, SingleClassIsError) {
  EXPECT_THROW(auroc(Scores{0.1f, 0.2f}, Labels{1, 1}), Error);
  EXPECT_THROW(auroc(Scores{0.1f}, Labels{0, 1}), Error);
}

TEST(Auroc, MatchesPairwiseOracleAndInvariances) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> level(0, 9);  // coarse values force ties
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 63;
    Scores s(n);
    Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = float(level(rng)) / 10.0f;
      y[i] = rng() % 2;
    }
    y[0] = 0;
    y[1] = 1;
    const double a = auroc(s, y);
    EXPECT_NEAR(a, testing::pairwise_auroc(s, y), 1e-12);
    Scores t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3.0f * s[i]) - 7.0f;
    EXPECT_NEAR(auroc(t, y), a, 1e-12);
  }
}

TEST(Auroc, NegationComplementsWithoutTies) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0, 1);
  Scores s(50), neg(50);
  Labels y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    s[i] = u(rng);
    neg[i] = -s[i];
    y[i] = i % 3 == 0;
  }
  EXPECT_NEAR(auroc(s, y) + auroc(neg, y), 1.0, 1e-12);
}

TEST(AveragePrecision, Examples) {
  EXPECT_DOUBLE_EQ(average_precision(Scores{0.9f, 0.1f}, Labels{1, 0}), 1.0);
  EXPECT_NEAR(average_precision(Scores{0.9f, 0.8f, 0.1f}, Labels{0, 1, 1}), 7.0 / 12.0, 1e-12);
  EXPECT_DOUBLE_EQ(average_precision(Scores{0.3f, 0.2f, 0.7f}, Labels{1, 1, 1}), 1.0);
  EXPECT_THROW(average_precision(Scores{0.3f, 0.2f}, Labels{0, 0}), Error);
}

TEST(AveragePrecision, MatchesThresholdTableOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 64;
    Scores s(n);
    Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = float(rng() % 8);
      y[i] = rng() % 2;
    }
    y[0] = 1;
    const double ap = average_precision(s, y);
    EXPECT_NEAR(ap, testing::brute_force_ap(s, y), 1e-12);
    Scores t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = 2.0f * s[i] + 1.0f;
    EXPECT_NEAR(average_precision(t, y), ap, 1e-12);
  }
}

Tensor mask_from(std::size_t h, std::size_t w, std::initializer_list<std::pair<int, int>> on) {
  Tensor m({h, w});
  for (auto [y, x] : on) m.at(y, x) = 1.0f;
  return m;
}

TEST(PixelAuroc, Examples) {
  const Tensor mask = mask_from(3, 3, {{0, 0}, {1, 1}});
  EXPECT_DOUBLE_EQ(pixel_auroc({mask}, {mask}), 1.0);
  Tensor inv({3, 3});
  for (std::size_t i = 0; i < 9; ++i) inv.data()[i] = 1.0f - mask.data()[i];
  EXPECT_DOUBLE_EQ(pixel_auroc({inv}, {mask}), 0.0);
  EXPECT_THROW(pixel_auroc({Tensor({2, 2})}, {mask}), Error);
}

TEST(PixelAuroc, PooledOracle) {
  std::mt19937_64 rng(4);
  std::vector<Tensor> maps, masks;
  Scores flat;
  Labels labels;
  for (int i = 0; i < 3; ++i) {
    maps.push_back(testing::random_tensor(rng, {8, 8}));
    Tensor m({8, 8});
    for (auto& v : m.data()) v = rng() % 4 == 0 ? 1.0f : 0.0f;
    masks.push_back(m);
    flat.insert(flat.end(), maps.back().data().begin(), maps.back().data().end());
    for (float v : m.data()) labels.push_back(v > 0.5f);
  }
  EXPECT_NEAR(pixel_auroc(maps, masks), testing::pairwise_auroc(flat, labels), 1e-12);
}

TEST(LabelComponents, EightConnectivity) {
  std::vector<int> labels;
  // Diagonal neighbours join; the far pixel is separate.
  EXPECT_EQ(label_components(mask_from(4, 4, {{0, 0}, {1, 1}, {2, 2}, {0, 3}}), labels), 2);
  EXPECT_EQ(labels[0], labels[5]);
  EXPECT_NE(labels[0], labels[3]);
  EXPECT_EQ(labels[1], -1);
  EXPECT_EQ(label_components(Tensor({3, 3}), labels), 0);
  // A U shape is one component even though its arms meet late in the scan.
  EXPECT_EQ(label_components(mask_from(3, 3, {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}, {1, 2}, {0, 2}}),
                             labels),
            1);
}

TEST(Pro, PerfectMapScoresOne) {
  const Tensor mask = mask_from(6, 6, {{1, 1}, {1, 2}, {4, 4}});
  EXPECT_NEAR(pro_score({mask}, {mask}), 1.0, 1e-12);
}

TEST(Pro, ConstantMapFollowsLinearRamp) {
  // One threshold: the curve jumps from (0, 0) to (1, 1). The segment
  // up to FPR 0.3 has mean height 0.15.
  const Tensor mask = mask_from(4, 4, {{0, 0}, {0, 1}, {3, 3}});
  const Tensor flat({4, 4}, 0.4f);
  EXPECT_NEAR(pro_score({flat}, {mask}), 0.15, 1e-12);
  EXPECT_NEAR(testing::exhaustive_pro({flat}, {mask}), 0.15, 1e-12);
}

TEST(Pro, TwoRegionFixtureMatchesOracle) {
  const Tensor mask = mask_from(6, 6, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {4, 3}, {4, 4}, {5, 4}});
  Tensor map({6, 6});
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t x = 0; x < 6; ++x) map.at(y, x) = 0.05f * float((y * 7 + x * 3) % 11);
  }
  map.at(0, 0) = 0.9f;
  map.at(1, 1) = 0.8f;
  map.at(4, 4) = 0.85f;
  map.at(5, 4) = 0.1f;
  EXPECT_NEAR(pro_score({map}, {mask}), testing::exhaustive_pro({map}, {mask}), 1e-3);
}

TEST(Pro, RandomFixturesMatchOracleAndAreRankInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 2 + rng() % 15, w = 2 + rng() % 15;
    std::vector<Tensor> maps, masks;
    for (int i = 0; i < 2; ++i) {
      maps.push_back(testing::random_tensor(rng, {h, w}));
      Tensor m({h, w});
      for (auto& v : m.data()) v = rng() % 5 == 0 ? 1.0f : 0.0f;
      masks.push_back(m);
    }
    masks[0].at(0, 0) = 1.0f;
    masks[1].at(h - 1, w - 1) = 0.0f;
    const double p = pro_score(maps, masks);
    EXPECT_NEAR(p, testing::exhaustive_pro(maps, masks), 1e-3);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    std::vector<Tensor> squashed = maps;
    for (auto& m : squashed) {
      for (auto& v : m.data()) v = v * v * v + 2.0f;
    }
    EXPECT_NEAR(pro_score(squashed, masks), p, 1e-9);
  }
}

TEST(Pro, Guards) {
  EXPECT_THROW(pro_score({Tensor({2, 2})}, {Tensor({2, 2})}), Error);
  EXPECT_THROW(pro_score({Tensor({2, 2})}, {Tensor({2, 2}, 1.0f)}), Error);
  const Tensor mask = mask_from(2, 2, {{0, 0}});
  EXPECT_THROW(pro_score({mask}, {mask}, 0.0), Error);
  EXPECT_THROW(pro_score({Tensor({2, 3})}, {mask}), Error);
}

}  // namespace
}  // namespace vmad
