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

#include "vmad/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "vmad/error.hpp"
#include "vmad/image.hpp"
#include "vmad/kernels.hpp"

namespace vmad {
namespace {

namespace fs = std::filesystem;

std::string image_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return buf;
}

std::vector<float> unit_vector(NormalSampler& rng, std::size_t dim) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(rng.next());
  l2_normalize(v);
  return v;
}

struct CategoryModel {
  std::vector<std::vector<std::vector<float>>> textures;  // [layer][texture][dim]
  std::vector<float> cls;
};

struct Block {
  std::size_t y0 = 0, x0 = 0, h = 0, w = 0;
  bool contains(std::size_t y, std::size_t x) const {
    return y >= y0 && y < y0 + h && x >= x0 && x < x0 + w;
  }
};

FeatureStack make_stack(const SyntheticSpec& spec, const CategoryModel& model, NormalSampler& rng,
                        const Block* anomaly) {
  const std::size_t g = spec.grid;
  std::vector<std::size_t> choice(g * g);
  for (auto& c : choice) c = static_cast<std::size_t>(rng.below(spec.textures));

  FeatureStack stack;
  stack.backbone_id = spec.backbone_id;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    Tensor values({g, g, spec.dim});
    auto data = values.data();
    for (std::size_t p = 0; p < g * g; ++p) {
      std::span<float> v = data.subspan(p * spec.dim, spec.dim);
      const auto& t = model.textures[l][choice[p]];
      for (std::size_t d = 0; d < spec.dim; ++d) {
        v[d] = t[d] + static_cast<float>(spec.noise * rng.next());
      }
      if (anomaly && anomaly->contains(p / g, p % g)) rotate_pairs(v);
    }
    stack.layers.push_back({spec.layers[l], std::move(values)});
  }
  stack.cls_token = model.cls;
  for (auto& x : stack.cls_token) x += static_cast<float>(spec.noise * rng.next());
  return stack;
}

Tensor block_mask(const SyntheticSpec& spec, const Block& b) {
  const std::size_t n = spec.mask_size;
  Tensor mask({n, n});
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      // Pixel (y, x) lies in patch (y * grid / n, x * grid / n).
      if (b.contains(y * spec.grid / n, x * spec.grid / n)) mask.at(y, x) = 1.0f;
    }
  }
  return mask;
}

void write_config(const fs::path& path, const SyntheticSpec& spec) {
  const std::size_t side = spec.mask_size;
  nlohmann::json cfg{{"backend", {{"kind", "files"}}},
                     {"backbone_id", spec.backbone_id},
                     {"preprocess", {{"resize_to", side}, {"crop_to", side}}},
                     {"fusion", {{"scheme", "grouped"}, {"groups", {spec.layers}}}},
                     {"eval_resolution", side}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << cfg.dump(2) << "\n";
}

}  // namespace

double NormalSampler::uniform() {
  // 53 random bits, shifted off zero so the logarithm below stays finite.
  return (static_cast<double>(rng_.next() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalSampler::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

void rotate_pairs(std::span<float> v) {
  std::size_t d = 0;
  for (; d + 1 < v.size(); d += 2) {
    const float a = v[d];
    v[d] = -v[d + 1];
    v[d + 1] = a;
  }
  if (d < v.size()) v[d] = -v[d];
}

void write_synthetic_dataset(const fs::path& root, const SyntheticSpec& spec) {
  require(!spec.categories.empty(), ErrorKind::InvalidArgument, "need at least one category");
  require(spec.grid >= 6, ErrorKind::InvalidArgument, "grid must be at least 6 patches");
  require(spec.dim >= 2 && spec.textures >= 1 && !spec.layers.empty(),
          ErrorKind::InvalidArgument, "dim, textures and layers must be non-empty");
  require(spec.mask_size % spec.grid == 0, ErrorKind::InvalidArgument,
          "mask_size must be a multiple of grid");

  for (std::size_t ci = 0; ci < spec.categories.size(); ++ci) {
    const std::string& name = spec.categories[ci];
    NormalSampler rng(category_stream(spec.seed, name, "synthetic").next());
    CategoryModel model;
    model.textures.resize(spec.layers.size());
    for (auto& layer : model.textures) {
      for (std::size_t t = 0; t < spec.textures; ++t) layer.push_back(unit_vector(rng, spec.dim));
    }
    model.cls = unit_vector(rng, spec.dim);

    const fs::path dir = root / name;
    for (const char* sub : {"train/good", "test/good", "test/rotated", "ground_truth/rotated"}) {
      fs::create_directories(dir / sub);
    }
    for (std::size_t i = 0; i < spec.train_per_category; ++i) {
      write_feature_file(dir / "train/good" / (image_name(i) + ".vadf"),
                         make_stack(spec, model, rng, nullptr));
    }
    for (std::size_t i = 0; i < spec.test_good; ++i) {
      write_feature_file(dir / "test/good" / (image_name(i) + ".vadf"),
                         make_stack(spec, model, rng, nullptr));
    }
    for (std::size_t i = 0; i < spec.test_anomalous; ++i) {
      Block b;
      b.h = 3 + static_cast<std::size_t>(rng.below(3));
      b.w = 3 + static_cast<std::size_t>(rng.below(3));
      b.y0 = static_cast<std::size_t>(rng.below(spec.grid - b.h + 1));
      b.x0 = static_cast<std::size_t>(rng.below(spec.grid - b.w + 1));
      write_feature_file(dir / "test/rotated" / (image_name(i) + ".vadf"),
                         make_stack(spec, model, rng, &b));
      write_mask_png(dir / "ground_truth/rotated" / (image_name(i) + "_mask.png"),
                     block_mask(spec, b));
    }
  }
  write_config(root / "config.json", spec);
}

}  // namespace vmad
