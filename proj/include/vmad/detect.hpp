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

#include "vmad/bank.hpp"
#include "vmad/error.hpp"
#include "vmad/extractor.hpp"
#include "vmad/fusion.hpp"
#include "vmad/tensor.hpp"

namespace vmad {

/// Fraction of the highest map pixels averaged into the image score.
inline constexpr double kImageScoreTopFraction = 0.01;

/// 1 - (best inner product against any memory row) per patch, as a
/// [grid_h, grid_w] map. Values are clamped at 0 from below to absorb
/// rounding on exact matches.
Tensor group_anomaly_map(const FusedPatches& query, const Matrix& memory);

/// Mean of the top 1% pixels of the map.
double score_image(const Tensor& map);

struct PixelScores {
  std::string category;
  Tensor map;                    // eval resolution
  std::vector<Tensor> view_maps; // grid resolution, aligned to the base view
};

struct DetectionResult {
  std::size_t index = 0;  // position in the input batch
  std::filesystem::path path;
  std::string category;
  double image_score = 0.0;
  Tensor map;
  std::vector<Tensor> view_maps;
};

struct BatchFailure {
  std::size_t index = 0;
  std::filesystem::path path;
  ErrorKind kind = ErrorKind::Io;
  std::string message;
};

struct BatchResult {
  std::vector<DetectionResult> results;  // input order, failures skipped
  std::vector<BatchFailure> failures;
};

/// Scores query images against loaded banks. Holds references only: the
/// banks and the extractor must outlive the detector.
class Detector {
 public:
  Detector(const MemoryBanks& banks, const FeatureExtractor& extractor, std::size_t eval_h,
           std::size_t eval_w);

  /// Category retrieval on the identity view, then one map per view
  /// (groups averaged, spatial views inverted), summed at grid resolution
  /// and upsampled once to the eval resolution.
  PixelScores score_pixels(const ImageSample& sample) const;

  DetectionResult detect(const ImageSample& sample) const;

  /// Order-preserving; a failing image is recorded and the batch continues.
  BatchResult detect_batch(const std::vector<ImageSample>& samples) const;

 private:
  const MemoryBanks& banks_;
  const FeatureExtractor& extractor_;
  std::size_t eval_h_;
  std::size_t eval_w_;
  std::vector<int> layers_;
};

}  // namespace vmad
