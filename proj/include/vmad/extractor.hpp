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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vmad/augment.hpp"
#include "vmad/features.hpp"
#include "vmad/image.hpp"

namespace vmad {

/// An image handed to the engine: a file path, optionally with pixels
/// already in memory (raw, not yet preprocessed).
struct ImageSample {
  std::filesystem::path path;
  std::optional<ImageTensor> pixels;
};

/// Maps (image, transform chain) to per-layer patch grids and a class token.
/// Implementations must be safe to call concurrently.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;

  virtual FeatureStack extract(const ImageSample& sample, const TransformChain& chain,
                               const std::vector<int>& layers) const = 0;
  virtual std::string kind() const = 0;
};

/// Runs the backend and checks the result: every requested layer present,
/// consistent grids, non-empty class token. Returns only the requested layers.
FeatureStack extract_features(const FeatureExtractor& backend, const ImageSample& sample,
                              const TransformChain& chain, const std::vector<int>& layers);

/// Base for backends that consume pixels. Loads and preprocesses the image,
/// applies the transform chain to [0, 1] intensities and hands the result to
/// features_from_image.
class PixelExtractor : public FeatureExtractor {
 public:
  explicit PixelExtractor(PreprocessSpec spec);

  FeatureStack extract(const ImageSample& sample, const TransformChain& chain,
                       const std::vector<int>& layers) const override;

  virtual FeatureStack features_from_image(const ImageTensor& image,
                                           const std::vector<int>& layers) const = 0;

  const PreprocessSpec& preprocess() const { return spec_; }

 private:
  PreprocessSpec spec_;
};

/// Reads precomputed .vadf files.
///
/// The base file of an image is the image path itself when it ends in
/// ".vadf"; otherwise features_root/<path relative to dataset_root> (or the
/// image path when no root is configured) with the extension replaced by
/// ".vadf". For a non-identity chain the backend first looks for
/// "<stem>.<chain tag>.vadf" next to the base file. Without such a file,
/// spatial transforms are derived by permuting the patch grid of the base
/// features and photometric views return the base features unchanged.
class FileFeatureBackend : public FeatureExtractor {
 public:
  FileFeatureBackend() = default;
  FileFeatureBackend(std::optional<std::filesystem::path> features_root,
                     std::optional<std::filesystem::path> dataset_root);

  FeatureStack extract(const ImageSample& sample, const TransformChain& chain,
                       const std::vector<int>& layers) const override;
  std::string kind() const override { return "files"; }

  std::filesystem::path base_path(const std::filesystem::path& image) const;
  std::filesystem::path variant_path(const std::filesystem::path& image,
                                     const TransformChain& chain) const;

 private:
  std::optional<std::filesystem::path> features_root_;
  std::optional<std::filesystem::path> dataset_root_;
};

/// Applies the spatial part of a chain to every layer grid of a stack.
FeatureStack transform_stack(FeatureStack stack, const TransformChain& chain);

struct BackendConfig {
  std::string kind = "files";  // "files" | "onnx"
  std::filesystem::path model;
  std::optional<std::filesystem::path> features_root;
  std::optional<std::filesystem::path> dataset_root;

  bool operator==(const BackendConfig&) const = default;
};

std::unique_ptr<FeatureExtractor> make_extractor(const BackendConfig& config,
                                                 const PreprocessSpec& preprocess);

#ifdef VMAD_WITH_ONNX
std::unique_ptr<PixelExtractor> make_onnx_extractor(const std::filesystem::path& model,
                                                    const PreprocessSpec& preprocess);
#endif

}  // namespace vmad
