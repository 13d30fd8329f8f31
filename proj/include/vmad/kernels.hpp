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
#include <span>
#include <vector>

#include "vmad/tensor.hpp"

namespace vmad {

/// Scales every row to unit Euclidean norm. All-zero rows are returned
/// unchanged.
Matrix l2_normalize_rows(Matrix m);

/// In-place unit normalization of a single vector (zero vectors untouched).
void l2_normalize(std::span<float> v);

/// out(i, j) = <q row i, m row j>. Each element is reduced over the feature
/// axis in ascending order, so the result does not depend on threading.
Matrix similarity_matmul(const Matrix& q, const Matrix& m);

/// Maximum of each row.
std::vector<float> rowwise_max(const Matrix& s);

/// For each query row, the largest inner product against any memory row.
/// Equivalent to rowwise_max(similarity_matmul(q, m)) without materializing
/// the full N x K similarity matrix.
std::vector<float> max_similarity(const Matrix& q, const Matrix& m);

/// Number of values averaged by topk_mean_fraction: max(1, floor(n * fraction)).
std::size_t topk_count(std::size_t n, double fraction);

/// Mean of the k largest values, k = topk_count(n, fraction). The selected
/// values are summed in descending order in double precision.
double topk_mean_fraction(std::span<const float> values, double fraction);

/// Bilinear resize with half-pixel centers (align_corners = false) and
/// border clamping. Accepts [h, w] or [c, h, w] tensors; the last two axes
/// are resampled.
Tensor bilinear_resize(const Tensor& map, std::size_t target_h, std::size_t target_w);

/// Nearest-neighbour resize with half-pixel centers; used for binary masks.
Tensor nearest_resize(const Tensor& map, std::size_t target_h, std::size_t target_w);

}  // namespace vmad
