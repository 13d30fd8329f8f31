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

#include <onnxruntime_cxx_api.h>

#include <cmath>
#include <mutex>
#include <set>

#include "vmad/error.hpp"
#include "vmad/extractor.hpp"

namespace vmad {
namespace {

// Model contract: input "pixels" [1, 3, H, W] (mean/std normalized),
// outputs "layer_NN" [1, grid_h * grid_w, D] and "cls" [1, D].
class OnnxExtractor final : public PixelExtractor {
 public:
  OnnxExtractor(const std::filesystem::path& model, const PreprocessSpec& spec)
      : PixelExtractor(spec),
        env_(ORT_LOGGING_LEVEL_WARNING, "vmad"),
        backbone_id_(model.stem().string()) {
    Ort::SessionOptions options;
    options.SetIntraOpNumThreads(1);
    options.SetGraphOptimizationLevel(GraphOptimizationLevel::ORT_ENABLE_ALL);
    try {
      session_ = std::make_unique<Ort::Session>(env_, model.c_str(), options);
    } catch (const Ort::Exception& e) {
      fail(ErrorKind::Io, "cannot load ONNX model " + model.string() + ": " + e.what());
    }
    Ort::AllocatorWithDefaultOptions alloc;
    for (std::size_t i = 0; i < session_->GetOutputCount(); ++i) {
      outputs_.insert(session_->GetOutputNameAllocated(i, alloc).get());
    }
    require(outputs_.count("cls") == 1, ErrorKind::Unsupported,
            model.string() + " has no 'cls' output");
  }

  std::string kind() const override { return "onnx"; }

  FeatureStack features_from_image(const ImageTensor& image,
                                   const std::vector<int>& layers) const override {
    for (int idx : layers) {
      require(outputs_.count(layer_tensor_name(idx)) == 1, ErrorKind::NotFound,
              "ONNX model does not export " + layer_tensor_name(idx));
    }
    Tensor input = normalize_channels(image, preprocess());
    const std::array<std::int64_t, 4> shape{1, 3, static_cast<std::int64_t>(image.height()),
                                            static_cast<std::int64_t>(image.width())};
    auto memory = Ort::MemoryInfo::CreateCpu(OrtArenaAllocator, OrtMemTypeDefault);
    auto data = input.data();
    Ort::Value in = Ort::Value::CreateTensor<float>(memory, data.data(), data.size(),
                                                    shape.data(), shape.size());

    std::vector<std::string> names{"cls"};
    for (int idx : layers) names.push_back(layer_tensor_name(idx));
    std::vector<const char*> name_ptrs;
    for (const auto& n : names) name_ptrs.push_back(n.c_str());
    const char* input_name = "pixels";

    std::vector<Ort::Value> out;
    try {
      out = session_->Run(Ort::RunOptions{nullptr}, &input_name, &in, 1, name_ptrs.data(),
                          name_ptrs.size());
    } catch (const Ort::Exception& e) {
      fail(ErrorKind::Io, std::string("ONNX inference failed: ") + e.what());
    }

    FeatureStack stack;
    stack.backbone_id = backbone_id_;
    {
      const auto info = out[0].GetTensorTypeAndShapeInfo();
      const float* p = out[0].GetTensorData<float>();
      stack.cls_token.assign(p, p + info.GetElementCount());
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto info = out[i + 1].GetTensorTypeAndShapeInfo();
      const auto dims = info.GetShape();
      require(dims.size() == 3 && dims[0] == 1, ErrorKind::ShapeMismatch,
              names[i + 1] + " must have shape [1, tokens, dim]");
      const auto tokens = static_cast<std::size_t>(dims[1]);
      const auto dim = static_cast<std::size_t>(dims[2]);
      const auto grid = static_cast<std::size_t>(std::lround(std::sqrt(double(tokens))));
      require(grid * grid == tokens, ErrorKind::ShapeMismatch,
              names[i + 1] + " token count " + std::to_string(tokens) +
                  " is not a square grid (register tokens must be stripped by the exporter)");
      const float* p = out[i + 1].GetTensorData<float>();
      stack.layers.push_back(
          {layers[i], Tensor({grid, grid, dim}, std::vector<float>(p, p + tokens * dim))});
    }
    return stack;
  }

 private:
  Ort::Env env_;
  std::string backbone_id_;
  std::unique_ptr<Ort::Session> session_;
  std::set<std::string> outputs_;
};

}  // namespace

std::unique_ptr<PixelExtractor> make_onnx_extractor(const std::filesystem::path& model,
                                                    const PreprocessSpec& preprocess) {
  return std::make_unique<OnnxExtractor>(model, preprocess);
}

}  // namespace vmad
