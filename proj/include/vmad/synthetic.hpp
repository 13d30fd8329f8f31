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
#include <string>
#include <vector>

#include "vmad/features.hpp"
#include "vmad/rng.hpp"

namespace vmad {

/// Gaussian samples from SplitMix64 via Box-Muller.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}
  double next();
  double uniform();  // in (0, 1)
  std::uint64_t below(std::uint64_t bound) { return rng_.below(bound); }

 private:
  SplitMix64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Feature-space benchmark written as a files-backend dataset.
///
/// Every category owns a few random unit "texture" vectors per layer; a
/// normal patch is one of them plus Gaussian noise. Anomalous images carry a
/// rectangular block of 3 to 5 patches per side whose features are rotated
/// by 90 degrees within each pair of dimensions, which makes them orthogonal
/// to their texture.
struct SyntheticSpec {
  std::vector<std::string> categories{"alpha", "beta", "gamma"};
  std::size_t grid = 16;
  std::size_t dim = 32;
  std::vector<int> layers{3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t textures = 4;
  std::size_t train_per_category = 3;
  std::size_t test_good = 4;
  std::size_t test_anomalous = 4;
  std::size_t mask_size = 256;
  double noise = 0.05;
  std::uint64_t seed = 0;
  std::string backbone_id = "synthetic";
};

/// Writes <root>/<category>/{train/good,test/good,test/rotated,
/// ground_truth/rotated} and <root>/config.json, a matching engine config.
void write_synthetic_dataset(const std::filesystem::path& root, const SyntheticSpec& spec = {});

/// Rotates consecutive dimension pairs by 90 degrees: (a, b) -> (-b, a).
/// An odd trailing dimension is negated.
void rotate_pairs(std::span<float> v);

}  // namespace vmad
