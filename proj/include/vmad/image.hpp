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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "vmad/tensor.hpp"

namespace vmad {

/// RGB image as a [3, height, width] tensor with intensities in [0, 1].
struct ImageTensor {
  Tensor pixels;

  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width, float fill = 0.0f)
      : pixels({3, height, width}, fill) {}
  explicit ImageTensor(Tensor t);

  std::size_t height() const { return pixels.dim(1); }
  std::size_t width() const { return pixels.dim(2); }
  bool square() const { return height() == width(); }

  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return pixels.data()[(c * height() + y) * width() + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return pixels.data()[(c * height() + y) * width() + x];
  }

  bool operator==(const ImageTensor&) const = default;
};

struct PreprocessSpec {
  std::size_t resize_to = 448;
  std::size_t crop_to = 392;
  std::array<float, 3> channel_mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> channel_std{0.229f, 0.224f, 0.225f};

  void validate() const;
  bool operator==(const PreprocessSpec&) const = default;
};

/// Decodes PNG/JPEG/BMP into an RGB tensor in [0, 1].
ImageTensor load_image(const std::filesystem::path& path);

/// Bilinear (half-pixel) resize to resize_to x resize_to followed by a
/// centered crop_to x crop_to window. Output size depends only on the spec.
ImageTensor preprocess_image(const ImageTensor& raw, const PreprocessSpec& spec);

/// Loads a ground-truth mask as a binary [h, w] tensor (nonzero -> 1).
Tensor load_mask(const std::filesystem::path& path);

/// Applies the same geometry as preprocess_image to a binary mask
/// (nearest-neighbour), then resamples to eval_size x eval_size.
Tensor preprocess_mask(const Tensor& mask, const PreprocessSpec& spec, std::size_t eval_size);

/// Channel-wise (x - mean) / std, as fed to a backbone.
Tensor normalize_channels(const ImageTensor& image, const PreprocessSpec& spec);

/// Writes an 8-bit grayscale PNG; values are clamped to [0, 255].
void write_gray_png(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    std::span<const std::uint8_t> pixels);

/// Writes an RGB image (values in [0, 1]) as PNG.
void write_rgb_png(const std::filesystem::path& path, const ImageTensor& image);

/// Writes a binary [h, w] mask as a 0/255 PNG.
void write_mask_png(const std::filesystem::path& path, const Tensor& mask);

}  // namespace vmad
