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
#include <span>
#include <vector>

#include "vmad/tensor.hpp"

namespace vmad {

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
/// labels: 1 = anomalous, 0 = normal.
double auroc(std::span<const float> scores, std::span<const std::uint8_t> labels);

/// Step-wise average precision. Tied scores form one threshold; each
/// threshold contributes (recall gain) x (precision at that threshold).
double average_precision(std::span<const float> scores, std::span<const std::uint8_t> labels);

/// AUROC over every pixel of every map, pooled.
double pixel_auroc(const std::vector<Tensor>& maps, const std::vector<Tensor>& masks);

/// Per-region overlap: mean coverage of ground-truth connected components
/// (8-connectivity) against the pooled false-positive rate, integrated with
/// the trapezoid rule over [0, fpr_limit] and divided by fpr_limit. The
/// curve starts at (0, 0) and gains one point per distinct map value.
double pro_score(const std::vector<Tensor>& maps, const std::vector<Tensor>& masks,
                 double fpr_limit = 0.3);

/// 8-connected component labels of a binary mask: -1 for background,
/// 0..count-1 for foreground. Returns the component count.
int label_components(const Tensor& mask, std::vector<int>& labels);

}  // namespace vmad
