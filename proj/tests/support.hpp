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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "vmad/augment.hpp"
#include "vmad/error.hpp"
#include "vmad/extractor.hpp"
#include "vmad/features.hpp"
#include "vmad/tensor.hpp"

namespace vmad::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("vmad-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- random data -------------------------------------------------------------

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = n(rng);
  return m;
}

inline Matrix random_unit_rows(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  Matrix m = random_matrix(rng, rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (float v : m.row(r)) s += double(v) * v;
    const double norm = std::sqrt(s);
    for (auto& v : m.row(r)) v = static_cast<float>(v / norm);
  }
  return m;
}

inline Tensor random_tensor(std::mt19937_64& rng, std::vector<std::size_t> dims, float lo = 0.0f,
                            float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(std::move(dims));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline FeatureStack random_stack(std::mt19937_64& rng, std::vector<int> layers, std::size_t gh,
                                 std::size_t gw, std::size_t dim,
                                 const std::string& backbone = "mock") {
  FeatureStack s;
  s.backbone_id = backbone;
  for (int l : layers) s.layers.push_back({l, random_tensor(rng, {gh, gw, dim}, -1.0f, 1.0f)});
  std::normal_distribution<float> n(0.0f, 1.0f);
  s.cls_token.resize(dim);
  for (auto& v : s.cls_token) v = n(rng);
  return s;
}

// ---- oracles -----------------------------------------------------------------

inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

inline double cosine(std::span<const float> a, std::span<const float> b) {
  const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
  return dot(a, b) / (na * nb);
}

/// Triple-loop product in double.
inline std::vector<std::vector<double>> naive_matmul(const Matrix& q, const Matrix& m) {
  std::vector<std::vector<double>> out(q.rows(), std::vector<double>(m.rows()));
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < m.rows(); ++j) out[i][j] = dot(q.row(i), m.row(j));
  }
  return out;
}

/// 1 - best match per query row by exhaustive scan.
inline std::vector<double> nn_scan_scores(const Matrix& q, const Matrix& m) {
  std::vector<double> out(q.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double best = -1e300;
    for (std::size_t j = 0; j < m.rows(); ++j) best = std::max(best, dot(q.row(i), m.row(j)));
    out[i] = 1.0 - best;
  }
  return out;
}

inline double sorted_topk_mean(std::vector<float> v, std::size_t k) {
  std::sort(v.begin(), v.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += v[i];
  return s / static_cast<double>(k);
}

/// Scalar half-pixel bilinear resize written out coordinate by coordinate.
inline std::vector<double> scalar_bilinear(const std::vector<double>& src, std::size_t h,
                                           std::size_t w, std::size_t th, std::size_t tw) {
  std::vector<double> out(th * tw);
  const auto sample = [&](std::size_t y, std::size_t x) { return src[y * w + x]; };
  for (std::size_t oy = 0; oy < th; ++oy) {
    double sy = (oy + 0.5) * double(h) / double(th) - 0.5;
    sy = std::clamp(sy, 0.0, double(h - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - double(y0);
    for (std::size_t ox = 0; ox < tw; ++ox) {
      double sx = (ox + 0.5) * double(w) / double(tw) - 0.5;
      sx = std::clamp(sx, 0.0, double(w - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - double(x0);
      const double top = sample(y0, x0) * (1 - fx) + sample(y0, x1) * fx;
      const double bot = sample(y1, x0) * (1 - fx) + sample(y1, x1) * fx;
      out[oy * tw + ox] = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

/// Mann-Whitney by explicit pair enumeration.
inline double pairwise_auroc(const std::vector<float>& s, const std::vector<std::uint8_t>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// AP from an explicit precision/recall table at every distinct threshold.
inline double brute_force_ap(const std::vector<float>& s, const std::vector<std::uint8_t>& y) {
  std::set<float, std::greater<>> thresholds(s.begin(), s.end());
  double total_pos = 0.0;
  for (auto l : y) total_pos += l;
  double ap = 0.0, prev_recall = 0.0;
  for (float t : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (y[i] ? tp : fp) += 1.0;
    }
    const double recall = tp / total_pos;
    if (tp + fp > 0) ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

/// Components by breadth-first flood fill, 8-connected.
inline std::vector<std::vector<std::size_t>> bfs_regions(const Tensor& mask) {
  const std::size_t h = mask.dim(0), w = mask.dim(1);
  std::vector<int> seen(h * w, 0);
  std::vector<std::vector<std::size_t>> regions;
  for (std::size_t start = 0; start < h * w; ++start) {
    if (seen[start] || mask.data()[start] <= 0.5f) continue;
    std::vector<std::size_t> region;
    std::queue<std::size_t> todo;
    todo.push(start);
    seen[start] = 1;
    while (!todo.empty()) {
      const std::size_t p = todo.front();
      todo.pop();
      region.push_back(p);
      const long y = long(p / w), x = long(p % w);
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const long ny = y + dy, nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= long(h) || nx >= long(w)) continue;
          const std::size_t q = std::size_t(ny) * w + std::size_t(nx);
          if (!seen[q] && mask.data()[q] > 0.5f) {
            seen[q] = 1;
            todo.push(q);
          }
        }
      }
    }
    regions.push_back(region);
  }
  return regions;
}

/// PRO by recomputing FPR and region overlap from scratch at every distinct
/// threshold, then integrating the resulting curve up to the limit.
inline double exhaustive_pro(const std::vector<Tensor>& maps, const std::vector<Tensor>& masks,
                             double limit = 0.3) {
  std::set<float, std::greater<>> thresholds;
  for (const auto& m : maps) thresholds.insert(m.data().begin(), m.data().end());
  std::vector<std::pair<double, double>> curve{{0.0, 0.0}};
  for (float t : thresholds) {
    double fp = 0.0, neg = 0.0, overlap = 0.0, regions = 0.0;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const auto v = maps[i].data();
      const auto g = masks[i].data();
      for (std::size_t p = 0; p < v.size(); ++p) {
        if (g[p] <= 0.5f) {
          neg += 1.0;
          if (v[p] >= t) fp += 1.0;
        }
      }
      for (const auto& region : bfs_regions(masks[i])) {
        double hit = 0.0;
        for (std::size_t p : region) hit += v[p] >= t ? 1.0 : 0.0;
        overlap += hit / double(region.size());
        regions += 1.0;
      }
    }
    curve.emplace_back(fp / neg, overlap / regions);
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    auto [x0, y0] = curve[i - 1];
    auto [x1, y1] = curve[i];
    if (x0 >= limit) break;
    if (x1 > limit) {
      y1 = y0 + (y1 - y0) * (limit - x0) / (x1 - x0);
      x1 = limit;
    }
    area += (x1 - x0) * (y0 + y1) / 2.0;
  }
  return area / limit;
}

// ---- mock extractors -------------------------------------------------------

/// Serves fixed stacks keyed by path. Spatial parts of a chain permute the
/// grid, photometric views pass through: an ideal equivariant backbone.
class TableExtractor : public FeatureExtractor {
 public:
  void add(const std::string& path, FeatureStack stack) { table_[path] = std::move(stack); }

  FeatureStack extract(const ImageSample& sample, const TransformChain& chain,
                       const std::vector<int>&) const override {
    const auto it = table_.find(sample.path.string());
    if (it == table_.end()) throw Error(ErrorKind::NotFound, "no features for " + sample.path.string());
    return transform_stack(it->second, chain);
  }
  std::string kind() const override { return "table"; }

 private:
  std::map<std::string, FeatureStack> table_;
};

/// Pixel backend whose patch features are per-channel min and max over each
/// patch_size x patch_size block plus a constant. Min and max do not depend
/// on visiting order, so the features follow flips and rotations exactly.
class BlockStatsExtractor : public PixelExtractor {
 public:
  BlockStatsExtractor(PreprocessSpec spec, std::size_t patch, std::vector<int> layers)
      : PixelExtractor(spec), patch_(patch), layers_(std::move(layers)) {}

  FeatureStack features_from_image(const ImageTensor& image,
                                   const std::vector<int>&) const override {
    const std::size_t g = image.height() / patch_;
    FeatureStack s;
    s.backbone_id = "block-stats";
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      Tensor t({g, g, 7});
      for (std::size_t gy = 0; gy < g; ++gy) {
        for (std::size_t gx = 0; gx < g; ++gx) {
          float* f = t.data().data() + (gy * g + gx) * 7;
          for (std::size_t c = 0; c < 3; ++c) {
            float lo = 1e30f, hi = -1e30f;
            for (std::size_t y = 0; y < patch_; ++y) {
              for (std::size_t x = 0; x < patch_; ++x) {
                const float v = image.at(c, gy * patch_ + y, gx * patch_ + x);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
              }
            }
            f[2 * c] = lo;
            f[2 * c + 1] = hi * static_cast<float>(li + 1);
          }
          f[6] = 0.25f;
        }
      }
      s.layers.push_back({layers_[li], std::move(t)});
    }
    s.cls_token = {1.0f, 0.5f, 0.25f, 0.125f, 0.5f, 0.25f, 1.0f};
    return s;
  }
  std::string kind() const override { return "block-stats"; }

 private:
  std::size_t patch_;
  std::vector<int> layers_;
};

}  // namespace vmad::testing
