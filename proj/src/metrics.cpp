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

#include "vmad/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "vmad/error.hpp"

namespace vmad {
namespace {

struct Counts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

Counts count_labels(std::span<const float> scores, std::span<const std::uint8_t> labels) {
  require(scores.size() == labels.size(), ErrorKind::ShapeMismatch,
          std::to_string(scores.size()) + " scores but " + std::to_string(labels.size()) + " labels");
  Counts c;
  for (auto l : labels) (l ? c.positives : c.negatives)++;
  return c;
}

std::vector<std::size_t> order_by_score_desc(std::span<const float> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void check_pairs(const std::vector<Tensor>& maps, const std::vector<Tensor>& masks) {
  require(maps.size() == masks.size(), ErrorKind::ShapeMismatch,
          std::to_string(maps.size()) + " maps but " + std::to_string(masks.size()) + " masks");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    require(maps[i].dims() == masks[i].dims() && maps[i].rank() == 2, ErrorKind::ShapeMismatch,
            "map " + shape_string(maps[i].dims()) + " and mask " + shape_string(masks[i].dims()) +
                " differ (image " + std::to_string(i) + ")");
  }
}

// Union-find over pixel indices.
struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

double auroc(std::span<const float> scores, std::span<const std::uint8_t> labels) {
  const Counts c = count_labels(scores, labels);
  require(c.positives > 0 && c.negatives > 0, ErrorKind::InvalidArgument,
          "AUROC needs both classes (" + std::to_string(c.positives) + " positive, " +
              std::to_string(c.negatives) + " negative)");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of 1-based mid-ranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in_group += labels[order[j]] ? 1 : 0;
      ++j;
    }
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    rank_sum += mid_rank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double p = static_cast<double>(c.positives);
  const double n = static_cast<double>(c.negatives);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * n);
}

double average_precision(std::span<const float> scores, std::span<const std::uint8_t> labels) {
  const Counts c = count_labels(scores, labels);
  require(c.positives > 0, ErrorKind::InvalidArgument, "average precision needs a positive sample");

  const auto order = order_by_score_desc(scores);
  double ap = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_tp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) ++group_tp; else ++fp;
      ++j;
    }
    tp += group_tp;
    if (group_tp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += precision * static_cast<double>(group_tp) / static_cast<double>(c.positives);
    }
    i = j;
  }
  return ap;
}

double pixel_auroc(const std::vector<Tensor>& maps, const std::vector<Tensor>& masks) {
  check_pairs(maps, masks);
  std::vector<float> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    scores.insert(scores.end(), maps[i].data().begin(), maps[i].data().end());
    for (float m : masks[i].data()) labels.push_back(m > 0.5f ? 1 : 0);
  }
  return auroc(scores, labels);
}

int label_components(const Tensor& mask, std::vector<int>& labels) {
  require(mask.rank() == 2, ErrorKind::ShapeMismatch, "mask must be 2-D");
  const std::size_t h = mask.dim(0), w = mask.dim(1);
  const auto fg = [&](std::size_t y, std::size_t x) { return mask.at(y, x) > 0.5f; };

  DisjointSets sets(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!fg(y, x)) continue;
      // Already-visited neighbours: W, NW, N, NE.
      if (x > 0 && fg(y, x - 1)) sets.unite(y * w + x, y * w + x - 1);
      if (y > 0) {
        if (x > 0 && fg(y - 1, x - 1)) sets.unite(y * w + x, (y - 1) * w + x - 1);
        if (fg(y - 1, x)) sets.unite(y * w + x, (y - 1) * w + x);
        if (x + 1 < w && fg(y - 1, x + 1)) sets.unite(y * w + x, (y - 1) * w + x + 1);
      }
    }
  }
  labels.assign(h * w, -1);
  std::vector<int> root_label(h * w, -1);
  int count = 0;
  for (std::size_t i = 0; i < h * w; ++i) {
    if (!fg(i / w, i % w)) continue;
    const std::size_t r = sets.find(i);
    if (root_label[r] < 0) root_label[r] = count++;
    labels[i] = root_label[r];
  }
  return count;
}

double pro_score(const std::vector<Tensor>& maps, const std::vector<Tensor>& masks,
                 double fpr_limit) {
  check_pairs(maps, masks);
  require(fpr_limit > 0.0 && fpr_limit <= 1.0, ErrorKind::InvalidArgument,
          "PRO integration limit must lie in (0, 1]");

  std::vector<float> scores;
  std::vector<int> region;  // global component id, -1 for negatives
  std::vector<std::size_t> region_size;
  std::vector<int> labels;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const int count = label_components(masks[i], labels);
    const int offset = static_cast<int>(region_size.size());
    region_size.resize(region_size.size() + static_cast<std::size_t>(count), 0);
    scores.insert(scores.end(), maps[i].data().begin(), maps[i].data().end());
    for (int l : labels) {
      region.push_back(l < 0 ? -1 : l + offset);
      if (l >= 0) ++region_size[static_cast<std::size_t>(l + offset)];
    }
  }
  require(!region_size.empty(), ErrorKind::InvalidArgument,
          "PRO needs at least one ground-truth region");
  const auto negatives =
      static_cast<std::size_t>(std::count(region.begin(), region.end(), -1));
  require(negatives > 0, ErrorKind::InvalidArgument, "PRO needs at least one negative pixel");

  const auto order = order_by_score_desc(scores);
  const double regions = static_cast<double>(region_size.size());

  double area = 0.0;
  double prev_fpr = 0.0, prev_pro = 0.0;
  double overlap_sum = 0.0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      const int r = region[order[j]];
      if (r < 0) {
        ++fp;
      } else {
        overlap_sum += 1.0 / static_cast<double>(region_size[static_cast<std::size_t>(r)]);
      }
      ++j;
    }
    i = j;
    const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    const double pro = overlap_sum / regions;
    if (fpr >= fpr_limit) {
      const double t = fpr > prev_fpr ? (fpr_limit - prev_fpr) / (fpr - prev_fpr) : 0.0;
      const double pro_at_limit = prev_pro + t * (pro - prev_pro);
      area += (fpr_limit - prev_fpr) * (prev_pro + pro_at_limit) / 2.0;
      return area / fpr_limit;
    }
    area += (fpr - prev_fpr) * (prev_pro + pro) / 2.0;
    prev_fpr = fpr;
    prev_pro = pro;
  }
  // Unreachable: the last threshold marks every pixel positive (FPR = 1).
  return area / fpr_limit;
}

}  // namespace vmad
