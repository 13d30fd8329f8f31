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

#include "vmad/augment.hpp"

#include <algorithm>
#include <cstdio>
#include <utility>

#include "vmad/error.hpp"

namespace vmad {
namespace {

enum class Spatial { None, Rot90, Rot180, Rot270, FlipX, FlipY };

Spatial spatial_of(SupportAug aug) {
  switch (aug) {
    case SupportAug::Rot90: return Spatial::Rot90;
    case SupportAug::Rot180: return Spatial::Rot180;
    case SupportAug::Rot270: return Spatial::Rot270;
    case SupportAug::FlipX: return Spatial::FlipX;
    case SupportAug::FlipY: return Spatial::FlipY;
  }
  return Spatial::None;
}

Spatial spatial_of(const ViewTransform& v) {
  if (v.kind == ViewTransform::Kind::XFlip) return Spatial::FlipX;
  if (v.kind == ViewTransform::Kind::YFlip) return Spatial::FlipY;
  return Spatial::None;
}

// Source coordinate feeding output position (y, x) of an h x w input.
std::pair<std::size_t, std::size_t> source_of(Spatial s, std::size_t y, std::size_t x,
                                              std::size_t h, std::size_t w) {
  switch (s) {
    case Spatial::Rot90: return {x, w - 1 - y};
    case Spatial::Rot180: return {h - 1 - y, w - 1 - x};
    case Spatial::Rot270: return {h - 1 - x, y};
    case Spatial::FlipX: return {y, w - 1 - x};
    case Spatial::FlipY: return {h - 1 - y, x};
    case Spatial::None: break;
  }
  return {y, x};
}

bool swaps_axes(Spatial s) { return s == Spatial::Rot90 || s == Spatial::Rot270; }

// Generic remap over `planes` planes of h x w cells holding `cell` floats each.
std::vector<float> remap(std::span<const float> src, std::size_t planes, std::size_t h,
                         std::size_t w, std::size_t cell, Spatial s) {
  const std::size_t oh = swaps_axes(s) ? w : h;
  const std::size_t ow = swaps_axes(s) ? h : w;
  std::vector<float> out(src.size());
  for (std::size_t p = 0; p < planes; ++p) {
    const float* in = src.data() + p * h * w * cell;
    float* dst = out.data() + p * oh * ow * cell;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const auto [sy, sx] = source_of(s, y, x, h, w);
        std::copy_n(in + (sy * w + sx) * cell, cell, dst + (y * ow + x) * cell);
      }
    }
  }
  return out;
}

ImageTensor spatial_image(const ImageTensor& image, Spatial s) {
  const std::size_t h = image.height(), w = image.width();
  const std::size_t oh = swaps_axes(s) ? w : h;
  const std::size_t ow = swaps_axes(s) ? h : w;
  return ImageTensor(Tensor({3, oh, ow}, remap(image.pixels.data(), 3, h, w, 1, s)));
}

Tensor spatial_hwc(const Tensor& hwc, Spatial s) {
  require(hwc.rank() == 3, ErrorKind::ShapeMismatch,
          "grid transform expects [h, w, c], got " + shape_string(hwc.dims()));
  const std::size_t h = hwc.dim(0), w = hwc.dim(1), c = hwc.dim(2);
  const std::size_t oh = swaps_axes(s) ? w : h;
  const std::size_t ow = swaps_axes(s) ? h : w;
  return Tensor({oh, ow, c}, remap(hwc.data(), 1, h, w, c, s));
}

Tensor spatial_map(const Tensor& map, Spatial s) {
  require(map.rank() == 2, ErrorKind::ShapeMismatch,
          "anomaly map must be 2-D, got " + shape_string(map.dims()));
  const std::size_t h = map.dim(0), w = map.dim(1);
  const std::size_t oh = swaps_axes(s) ? w : h;
  const std::size_t ow = swaps_axes(s) ? h : w;
  return Tensor({oh, ow}, remap(map.data(), 1, h, w, 1, s));
}

std::string format_tau(float tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", static_cast<double>(tau));
  return buf;
}

}  // namespace

std::string_view to_string(SupportAug aug) {
  switch (aug) {
    case SupportAug::Rot90: return "rot90";
    case SupportAug::Rot180: return "rot180";
    case SupportAug::Rot270: return "rot270";
    case SupportAug::FlipX: return "flipx";
    case SupportAug::FlipY: return "flipy";
  }
  return "?";
}

SupportAug parse_support_aug(std::string_view name) {
  for (auto aug : {SupportAug::Rot90, SupportAug::Rot180, SupportAug::Rot270, SupportAug::FlipX,
                   SupportAug::FlipY}) {
    if (to_string(aug) == name) return aug;
  }
  fail(ErrorKind::InvalidArgument,
       "unknown support augmentation '" + std::string(name) +
           "' (expected rot90, rot180, rot270, flipx or flipy)");
}

std::string_view kind_name(ViewTransform::Kind kind) {
  using K = ViewTransform::Kind;
  switch (kind) {
    case K::Identity: return "identity";
    case K::PosClamp: return "pos_clamp";
    case K::NegClamp: return "neg_clamp";
    case K::XFlip: return "xflip";
    case K::YFlip: return "yflip";
    case K::RBSwap: return "rb_swap";
  }
  return "?";
}

ViewTransform::Kind parse_view_kind(std::string_view name) {
  using K = ViewTransform::Kind;
  for (auto k : {K::Identity, K::PosClamp, K::NegClamp, K::XFlip, K::YFlip, K::RBSwap}) {
    if (kind_name(k) == name) return k;
  }
  fail(ErrorKind::InvalidArgument,
       "unknown view kind '" + std::string(name) +
           "' (expected identity, pos_clamp, neg_clamp, xflip, yflip or rb_swap)");
}

void ViewTransform::validate() const {
  if (has_tau()) {
    require(tau > 0.0f && tau < 1.0f, ErrorKind::InvalidArgument,
            std::string(kind_name(kind)) + " tau must lie strictly inside (0, 1), got " +
                format_tau(tau));
  }
}

std::string ViewTransform::tag() const {
  std::string t(kind_name(kind));
  if (has_tau()) t += format_tau(tau);
  return t;
}

AugmentationPlan AugmentationPlan::defaults() {
  return {{SupportAug::Rot90, SupportAug::Rot180, SupportAug::Rot270},
          {ViewTransform::identity(), ViewTransform::pos_clamp(0.5f), ViewTransform::yflip()}};
}

void AugmentationPlan::normalize() {
  std::sort(support_augs.begin(), support_augs.end());
  support_augs.erase(std::unique(support_augs.begin(), support_augs.end()), support_augs.end());
  validate();
}

void AugmentationPlan::validate() const {
  require(std::is_sorted(support_augs.begin(), support_augs.end()) &&
              std::adjacent_find(support_augs.begin(), support_augs.end()) == support_augs.end(),
          ErrorKind::InvalidArgument, "support augmentations must be unique");
  require(!views.empty() && views.front().kind == ViewTransform::Kind::Identity,
          ErrorKind::InvalidArgument, "the view list must start with identity");
  for (std::size_t i = 0; i < views.size(); ++i) {
    views[i].validate();
    require(i == 0 || views[i].kind != ViewTransform::Kind::Identity, ErrorKind::InvalidArgument,
            "identity may appear only once in the view list");
  }
}

std::string TransformChain::tag() const {
  std::string t;
  if (support) t = to_string(*support);
  if (view.kind != ViewTransform::Kind::Identity) {
    if (!t.empty()) t += '.';
    t += view.tag();
  }
  return t;
}

ImageTensor apply_support_aug(const ImageTensor& image, SupportAug aug) {
  require(image.square(), ErrorKind::InvalidArgument,
          "support augmentation needs a square image, got " + std::to_string(image.height()) +
              "x" + std::to_string(image.width()));
  return spatial_image(image, spatial_of(aug));
}

std::vector<ImageTensor> expand_support_set(const ImageTensor& image,
                                            const std::vector<SupportAug>& augs) {
  require(image.square(), ErrorKind::InvalidArgument,
          "support augmentation needs a square image, got " + std::to_string(image.height()) +
              "x" + std::to_string(image.width()));
  std::vector<SupportAug> ordered = augs;
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  std::vector<ImageTensor> out;
  out.reserve(1 + ordered.size());
  out.push_back(image);
  for (auto aug : ordered) out.push_back(apply_support_aug(image, aug));
  return out;
}

ImageTensor apply_view(const ImageTensor& image, const ViewTransform& view) {
  using K = ViewTransform::Kind;
  view.validate();
  switch (view.kind) {
    case K::Identity: return image;
    case K::XFlip:
    case K::YFlip: return spatial_image(image, spatial_of(view));
    case K::RBSwap: {
      ImageTensor out = image;
      const std::size_t plane = image.height() * image.width();
      auto d = out.pixels.data();
      std::swap_ranges(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(plane),
                       d.begin() + static_cast<std::ptrdiff_t>(2 * plane));
      return out;
    }
    case K::PosClamp: {
      ImageTensor out = image;
      for (float& v : out.pixels.data()) v = std::min(v, view.tau) / view.tau;
      return out;
    }
    case K::NegClamp: {
      ImageTensor out = image;
      for (float& v : out.pixels.data()) v = (std::max(v, view.tau) - view.tau) / (1.0f - view.tau);
      return out;
    }
  }
  return image;
}

ImageTensor apply_chain(const ImageTensor& image, const TransformChain& chain) {
  ImageTensor out = chain.support ? apply_support_aug(image, *chain.support) : image;
  return apply_view(out, chain.view);
}

Tensor invert_anomaly_map(const Tensor& map, const ViewTransform& view) {
  // Both flips are involutions, so the inverse is the forward transform.
  if (!view.spatial()) return map;
  return spatial_map(map, spatial_of(view));
}

Tensor transform_map(const Tensor& map, const ViewTransform& view) {
  if (!view.spatial()) return map;
  return spatial_map(map, spatial_of(view));
}

Tensor transform_grid(const Tensor& hwc, SupportAug aug) { return spatial_hwc(hwc, spatial_of(aug)); }

Tensor transform_grid(const Tensor& hwc, const ViewTransform& view) {
  if (!view.spatial()) return hwc;
  return spatial_hwc(hwc, spatial_of(view));
}

}  // namespace vmad
