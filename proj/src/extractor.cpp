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

#include "vmad/extractor.hpp"

#include <algorithm>

#include "vmad/error.hpp"

namespace vmad {

FeatureStack extract_features(const FeatureExtractor& backend, const ImageSample& sample,
                              const TransformChain& chain, const std::vector<int>& layers) {
  FeatureStack full = backend.extract(sample, chain, layers);
  for (int idx : layers) {
    require(full.has_layer(idx), ErrorKind::NotFound,
            backend.kind() + " backend returned no " + layer_tensor_name(idx) + " for " +
                sample.path.string());
  }
  FeatureStack stack = full.select(layers);
  stack.validate();
  return stack;
}

PixelExtractor::PixelExtractor(PreprocessSpec spec) : spec_(spec) { spec_.validate(); }

FeatureStack PixelExtractor::extract(const ImageSample& sample, const TransformChain& chain,
                                     const std::vector<int>& layers) const {
  const ImageTensor raw = sample.pixels ? *sample.pixels : load_image(sample.path);
  const ImageTensor image = apply_chain(preprocess_image(raw, spec_), chain);
  return features_from_image(image, layers);
}

FileFeatureBackend::FileFeatureBackend(std::optional<std::filesystem::path> features_root,
                                       std::optional<std::filesystem::path> dataset_root)
    : features_root_(std::move(features_root)), dataset_root_(std::move(dataset_root)) {}

std::filesystem::path FileFeatureBackend::base_path(const std::filesystem::path& image) const {
  if (image.extension() == ".vadf") return image;
  std::filesystem::path p = image;
  if (features_root_) {
    const std::filesystem::path rel =
        dataset_root_ ? std::filesystem::relative(image, *dataset_root_) : image.filename();
    p = *features_root_ / rel;
  }
  p.replace_extension(".vadf");
  return p;
}

std::filesystem::path FileFeatureBackend::variant_path(const std::filesystem::path& image,
                                                       const TransformChain& chain) const {
  const std::filesystem::path base = base_path(image);
  return base.parent_path() / (base.stem().string() + "." + chain.tag() + ".vadf");
}

FeatureStack transform_stack(FeatureStack stack, const TransformChain& chain) {
  for (auto& layer : stack.layers) {
    if (chain.support) layer.values = transform_grid(layer.values, *chain.support);
    layer.values = transform_grid(layer.values, chain.view);
  }
  return stack;
}

FeatureStack FileFeatureBackend::extract(const ImageSample& sample, const TransformChain& chain,
                                         const std::vector<int>& /*layers*/) const {
  if (!chain.is_identity()) {
    const auto variant = variant_path(sample.path, chain);
    if (std::filesystem::exists(variant)) return read_feature_file(variant);
  }
  const auto base = base_path(sample.path);
  require(std::filesystem::exists(base), ErrorKind::NotFound,
          "no feature file " + base.string() + " for image " + sample.path.string());
  FeatureStack stack = read_feature_file(base);
  return chain.is_identity() ? stack : transform_stack(std::move(stack), chain);
}

std::unique_ptr<FeatureExtractor> make_extractor(const BackendConfig& config,
                                                 const PreprocessSpec& preprocess) {
  if (config.kind == "files") {
    return std::make_unique<FileFeatureBackend>(config.features_root, config.dataset_root);
  }
  if (config.kind == "onnx") {
#ifdef VMAD_WITH_ONNX
    return make_onnx_extractor(config.model, preprocess);
#else
    (void)preprocess;
    fail(ErrorKind::Unsupported,
         "this build has no ONNX Runtime support; reconfigure with -DVMAD_WITH_ONNX=ON");
#endif
  }
  fail(ErrorKind::InvalidArgument, "unknown backend kind '" + config.kind + "'");
}

}  // namespace vmad
