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

#include "vmad/detect.hpp"

#include <algorithm>
#include <optional>

#include "vmad/kernels.hpp"
#include "vmad/parallel.hpp"

namespace vmad {

Tensor group_anomaly_map(const FusedPatches& query, const Matrix& memory) {
  require(memory.rows() >= 1, ErrorKind::InvalidArgument, "patch memory is empty");
  require(query.matrix.rows() == query.grid_h * query.grid_w, ErrorKind::ShapeMismatch,
          "fused query has " + std::to_string(query.matrix.rows()) + " rows for a " +
              std::to_string(query.grid_h) + "x" + std::to_string(query.grid_w) + " grid");
  const std::vector<float> best = max_similarity(query.matrix, memory);
  Tensor map({query.grid_h, query.grid_w});
  auto out = map.data();
  for (std::size_t i = 0; i < best.size(); ++i) out[i] = std::max(0.0f, 1.0f - best[i]);
  return map;
}

double score_image(const Tensor& map) {
  return topk_mean_fraction(map.data(), kImageScoreTopFraction);
}

Detector::Detector(const MemoryBanks& banks, const FeatureExtractor& extractor,
                   std::size_t eval_h, std::size_t eval_w)
    : banks_(banks),
      extractor_(extractor),
      eval_h_(eval_h),
      eval_w_(eval_w),
      layers_(banks.manifest.fusion.layers()) {
  require(eval_h >= 1 && eval_w >= 1, ErrorKind::InvalidArgument,
          "evaluation resolution must be positive");
}

PixelScores Detector::score_pixels(const ImageSample& sample) const {
  const BankManifest& m = banks_.manifest;
  const FeatureStack base = extract_features(extractor_, sample, TransformChain{}, layers_);
  require(base.backbone_id == m.backbone_id, ErrorKind::ManifestMismatch,
          sample.path.string() + ": features from backbone '" + base.backbone_id +
              "' but the bank was built with '" + m.backbone_id + "'");
  require(base.grid_h() == m.grid_h && base.grid_w() == m.grid_w && base.dim() == m.layer_dim,
          ErrorKind::ShapeMismatch,
          sample.path.string() + ": feature grid " + std::to_string(base.grid_h()) + "x" +
              std::to_string(base.grid_w()) + "x" + std::to_string(base.dim()) +
              " does not match the bank's " + std::to_string(m.grid_h) + "x" +
              std::to_string(m.grid_w) + "x" + std::to_string(m.layer_dim));

  PixelScores out;
  out.category = m.category_indexed ? retrieve_category(base.cls_token, banks_.globals)
                                    : std::string(kMixedCategory);
  require(banks_.patches.contains(out.category), ErrorKind::NotFound,
          "category '" + out.category + "' has no patch memory");

  Tensor total({m.grid_h, m.grid_w});
  for (std::size_t v = 0; v < m.plan.views.size(); ++v) {
    const ViewTransform& view = m.plan.views[v];
    const FeatureStack stack =
        v == 0 ? base : extract_features(extractor_, sample, TransformChain{std::nullopt, view}, layers_);
    const auto fused = fuse_groups(stack, m.fusion);
    std::vector<Tensor> group_maps;
    for (const auto& g : fused) {
      group_maps.push_back(group_anomaly_map(g, banks_.patches.memory(v, out.category, g.group_id)));
    }
    Tensor view_map = invert_anomaly_map(mean_maps(group_maps), view);
    require(view_map.dims() == total.dims(), ErrorKind::ShapeMismatch,
            "view " + view.tag() + " produced a map of shape " + shape_string(view_map.dims()));
    auto acc = total.data();
    auto src = view_map.data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
    out.view_maps.push_back(std::move(view_map));
  }
  out.map = bilinear_resize(total, eval_h_, eval_w_);
  return out;
}

DetectionResult Detector::detect(const ImageSample& sample) const {
  PixelScores s = score_pixels(sample);
  DetectionResult r;
  r.path = sample.path;
  r.category = std::move(s.category);
  r.image_score = score_image(s.map);
  r.map = std::move(s.map);
  r.view_maps = std::move(s.view_maps);
  return r;
}

BatchResult Detector::detect_batch(const std::vector<ImageSample>& samples) const {
  std::vector<std::optional<DetectionResult>> slots(samples.size());
  std::vector<std::optional<BatchFailure>> errors(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    try {
      slots[i] = detect(samples[i]);
      slots[i]->index = i;
    } catch (const Error& e) {
      errors[i] = BatchFailure{i, samples[i].path, e.kind(), e.what()};
    }
  });
  BatchResult out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (slots[i]) out.results.push_back(std::move(*slots[i]));
    if (errors[i]) out.failures.push_back(std::move(*errors[i]));
  }
  return out;
}

}  // namespace vmad
