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

#include "vmad/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "vmad/error.hpp"
#include "vmad/parallel.hpp"

namespace vmad {
namespace {

// Query rows handled per parallel task in the similarity kernels.
constexpr std::size_t kRowTile = 16;

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) t.at(c, r) = src[c];
  }
  return t;
}

void check_similarity_shapes(const Matrix& q, const Matrix& m) {
  require(q.cols() == m.cols(), ErrorKind::ShapeMismatch,
          "similarity between query " + q.shape() + " and memory " + m.shape() +
              ": feature dimensions differ");
  require(m.rows() >= 1, ErrorKind::InvalidArgument,
          "similarity against empty memory " + m.shape());
}

// out[j] = sum_d q[d] * mt(d, j), accumulated over d in ascending order for
// every j. Vectorizes across j without reassociating any single sum.
void similarity_row(std::span<const float> q, const Matrix& mt, std::span<float> out) {
  std::fill(out.begin(), out.end(), 0.0f);
  const std::size_t k = mt.cols();
  for (std::size_t d = 0; d < q.size(); ++d) {
    const float qd = q[d];
    const float* mrow = mt.row(d).data();
    float* o = out.data();
    for (std::size_t j = 0; j < k; ++j) o[j] += qd * mrow[j];
  }
}

void resize_plane_bilinear(const float* src, std::size_t h, std::size_t w, float* dst,
                           std::size_t th, std::size_t tw) {
  const double sy = static_cast<double>(h) / static_cast<double>(th);
  const double sx = static_cast<double>(w) / static_cast<double>(tw);

  std::vector<std::size_t> x0(tw), x1(tw);
  std::vector<float> fx(tw);
  for (std::size_t x = 0; x < tw; ++x) {
    double s = (static_cast<double>(x) + 0.5) * sx - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(w - 1));
    x0[x] = static_cast<std::size_t>(std::floor(s));
    x1[x] = std::min(x0[x] + 1, w - 1);
    fx[x] = static_cast<float>(s - static_cast<double>(x0[x]));
  }
  for (std::size_t y = 0; y < th; ++y) {
    double s = (static_cast<double>(y) + 0.5) * sy - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(h - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(s));
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const auto fy = static_cast<float>(s - static_cast<double>(y0));
    const float* r0 = src + y0 * w;
    const float* r1 = src + y1 * w;
    float* out = dst + y * tw;
    for (std::size_t x = 0; x < tw; ++x) {
      const float top = std::lerp(r0[x0[x]], r0[x1[x]], fx[x]);
      const float bottom = std::lerp(r1[x0[x]], r1[x1[x]], fx[x]);
      out[x] = std::lerp(top, bottom, fy);
    }
  }
}

void resize_plane_nearest(const float* src, std::size_t h, std::size_t w, float* dst,
                          std::size_t th, std::size_t tw) {
  const auto index = [](std::size_t d, std::size_t in, std::size_t out) {
    const double s = (static_cast<double>(d) + 0.5) * static_cast<double>(in) /
                     static_cast<double>(out);
    return std::min(static_cast<std::size_t>(std::floor(s)), in - 1);
  };
  for (std::size_t y = 0; y < th; ++y) {
    const std::size_t sy = index(y, h, th);
    for (std::size_t x = 0; x < tw; ++x) dst[y * tw + x] = src[sy * w + index(x, w, tw)];
  }
}

using PlaneFn = void (*)(const float*, std::size_t, std::size_t, float*, std::size_t,
                         std::size_t);

Tensor resize_planes(const Tensor& map, std::size_t th, std::size_t tw, PlaneFn fn) {
  require(map.rank() == 2 || map.rank() == 3, ErrorKind::ShapeMismatch,
          "resize expects [h, w] or [c, h, w], got " + shape_string(map.dims()));
  require(th >= 1 && tw >= 1, ErrorKind::InvalidArgument, "resize target must be at least 1x1");
  const std::size_t planes = map.rank() == 3 ? map.dim(0) : 1;
  const std::size_t h = map.dim(map.rank() - 2);
  const std::size_t w = map.dim(map.rank() - 1);
  require(h >= 1 && w >= 1, ErrorKind::InvalidArgument, "resize source must be at least 1x1");

  std::vector<std::size_t> dims = map.dims();
  dims[dims.size() - 2] = th;
  dims[dims.size() - 1] = tw;
  Tensor out(dims);
  for (std::size_t p = 0; p < planes; ++p) {
    fn(map.data().data() + p * h * w, h, w, out.data().data() + p * th * tw, th, tw);
  }
  return out;
}

}  // namespace

void l2_normalize(std::span<float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (float& x : v) x = static_cast<float>(x * inv);
}

Matrix l2_normalize_rows(Matrix m) {
  for (std::size_t r = 0; r < m.rows(); ++r) l2_normalize(m.row(r));
  return m;
}

Matrix similarity_matmul(const Matrix& q, const Matrix& m) {
  check_similarity_shapes(q, m);
  const Matrix mt = transpose(m);
  Matrix out(q.rows(), m.rows());
  parallel_for(q.rows(), [&](std::size_t i) { similarity_row(q.row(i), mt, out.row(i)); });
  return out;
}

std::vector<float> rowwise_max(const Matrix& s) {
  require(!s.empty(), ErrorKind::InvalidArgument, "rowwise_max of empty matrix " + s.shape());
  std::vector<float> out(s.rows());
  parallel_for(s.rows(), [&](std::size_t i) {
    const auto r = s.row(i);
    out[i] = *std::max_element(r.begin(), r.end());
  });
  return out;
}

std::vector<float> max_similarity(const Matrix& q, const Matrix& m) {
  check_similarity_shapes(q, m);
  const Matrix mt = transpose(m);
  std::vector<float> out(q.rows());
  const std::size_t tiles = (q.rows() + kRowTile - 1) / kRowTile;
  parallel_for(tiles, [&](std::size_t t) {
    std::vector<float> sims(m.rows());
    const std::size_t end = std::min(q.rows(), (t + 1) * kRowTile);
    for (std::size_t i = t * kRowTile; i < end; ++i) {
      similarity_row(q.row(i), mt, sims);
      out[i] = *std::max_element(sims.begin(), sims.end());
    }
  });
  return out;
}

std::size_t topk_count(std::size_t n, double fraction) {
  // The small epsilon keeps products such as 100 * 0.29 from flooring to 28.
  const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

double topk_mean_fraction(std::span<const float> values, double fraction) {
  require(!values.empty(), ErrorKind::InvalidArgument, "top-k mean of an empty vector");
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::InvalidArgument,
          "top-k fraction must lie in (0, 1], got " + std::to_string(fraction));
  const std::size_t k = topk_count(values.size(), fraction);
  std::vector<float> v(values.begin(), values.end());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(),
                    std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += v[i];
  return sum / static_cast<double>(k);
}

Tensor bilinear_resize(const Tensor& map, std::size_t target_h, std::size_t target_w) {
  return resize_planes(map, target_h, target_w, resize_plane_bilinear);
}

Tensor nearest_resize(const Tensor& map, std::size_t target_h, std::size_t target_w) {
  return resize_planes(map, target_h, target_w, resize_plane_nearest);
}

}  // namespace vmad
