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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vmad/image.hpp"
#include "vmad/tensor.hpp"

namespace vmad {

/// Geometric support-set augmentations. Declaration order is the canonical
/// order in which expanded variants are produced.
enum class SupportAug { Rot90, Rot180, Rot270, FlipX, FlipY };

std::string_view to_string(SupportAug aug);
SupportAug parse_support_aug(std::string_view name);

/// Transform applied identically to the query and every support image.
/// Rotations are counter-clockwise.
struct ViewTransform {
  enum class Kind { Identity, PosClamp, NegClamp, XFlip, YFlip, RBSwap };

  Kind kind = Kind::Identity;
  float tau = 0.5f;  // PosClamp / NegClamp only

  static ViewTransform identity() { return {}; }
  static ViewTransform pos_clamp(float tau) { return {Kind::PosClamp, tau}; }
  static ViewTransform neg_clamp(float tau) { return {Kind::NegClamp, tau}; }
  static ViewTransform xflip() { return {Kind::XFlip, 0.5f}; }
  static ViewTransform yflip() { return {Kind::YFlip, 0.5f}; }
  static ViewTransform rb_swap() { return {Kind::RBSwap, 0.5f}; }

  bool has_tau() const { return kind == Kind::PosClamp || kind == Kind::NegClamp; }
  bool spatial() const { return kind == Kind::XFlip || kind == Kind::YFlip; }
  void validate() const;

  /// Short stable name, e.g. "identity", "pos_clamp0.5", "yflip".
  std::string tag() const;

  bool operator==(const ViewTransform& o) const {
    return kind == o.kind && (!has_tau() || tau == o.tau);
  }
};

std::string_view kind_name(ViewTransform::Kind kind);
ViewTransform::Kind parse_view_kind(std::string_view name);

struct AugmentationPlan {
  std::vector<SupportAug> support_augs;  // canonical order, no duplicates
  std::vector<ViewTransform> views;      // views[0] is Identity

  /// Rot90/Rot180/Rot270 support augmentation; Identity, PosClamp(0.5), YFlip views.
  static AugmentationPlan defaults();

  /// Sorts/dedups support_augs and checks the view invariants.
  void normalize();
  void validate() const;

  bool operator==(const AugmentationPlan&) const = default;
};

/// Support augmentation followed by a view; the unit of work handed to a
/// feature backend.
struct TransformChain {
  std::optional<SupportAug> support;
  ViewTransform view;

  bool is_identity() const {
    return !support && view.kind == ViewTransform::Kind::Identity;
  }
  /// "" for the identity chain, otherwise e.g. "rot90", "yflip", "rot90.pos_clamp0.5".
  std::string tag() const;
};

ImageTensor apply_support_aug(const ImageTensor& image, SupportAug aug);

/// [original] followed by one image per augmentation in canonical order.
std::vector<ImageTensor> expand_support_set(const ImageTensor& image,
                                            const std::vector<SupportAug>& augs);

ImageTensor apply_view(const ImageTensor& image, const ViewTransform& view);

ImageTensor apply_chain(const ImageTensor& image, const TransformChain& chain);

/// Maps an anomaly map computed under `view` back onto the base orientation.
Tensor invert_anomaly_map(const Tensor& map, const ViewTransform& view);

/// Spatial part of a transform applied to a channels-last [h, w, c] grid,
/// i.e. how an ideal equivariant extractor's patch grid moves.
Tensor transform_grid(const Tensor& hwc, SupportAug aug);
Tensor transform_grid(const Tensor& hwc, const ViewTransform& view);

/// Spatial forward transform of a 2-D map (the inverse of invert_anomaly_map).
Tensor transform_map(const Tensor& map, const ViewTransform& view);

}  // namespace vmad
