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

#include "vmad/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

#include "vmad/error.hpp"
#include "vmad/kernels.hpp"

namespace vmad {
namespace {

Tensor center_crop(const Tensor& t, std::size_t size) {
  const std::size_t planes = t.rank() == 3 ? t.dim(0) : 1;
  const std::size_t h = t.dim(t.rank() - 2);
  const std::size_t w = t.dim(t.rank() - 1);
  const std::size_t top = (h - size) / 2;
  const std::size_t left = (w - size) / 2;
  std::vector<std::size_t> dims = t.dims();
  dims[dims.size() - 2] = size;
  dims[dims.size() - 1] = size;
  Tensor out(dims);
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < size; ++y) {
      const float* row = src.data() + (p * h + top + y) * w + left;
      std::copy(row, row + size, dst.data() + (p * size + y) * size);
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const cv::Mat& mat) {
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::Io, "cannot write " + path.string() + ": " + e.what());
  }
  require(ok, ErrorKind::Io, "cannot write " + path.string());
}

}  // namespace

ImageTensor::ImageTensor(Tensor t) : pixels(std::move(t)) {
  require(pixels.rank() == 3 && pixels.dim(0) == 3, ErrorKind::ShapeMismatch,
          "image tensor must be [3, h, w], got " + shape_string(pixels.dims()));
}

void PreprocessSpec::validate() const {
  require(resize_to >= 1 && crop_to >= 1, ErrorKind::InvalidArgument,
          "preprocess sizes must be positive");
  require(crop_to <= resize_to, ErrorKind::InvalidArgument,
          "crop_to (" + std::to_string(crop_to) + ") exceeds resize_to (" +
              std::to_string(resize_to) + ")");
  for (float s : channel_std) {
    require(s > 0.0f, ErrorKind::InvalidArgument, "channel std must be positive");
  }
}

ImageTensor load_image(const std::filesystem::path& path) {
  cv::Mat bgr;
  try {
    bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::Io, "cannot decode image " + path.string() + ": " + e.what());
  }
  require(!bgr.empty(), ErrorKind::Io, "unreadable or empty image: " + path.string());

  const auto h = static_cast<std::size_t>(bgr.rows);
  const auto w = static_cast<std::size_t>(bgr.cols);
  ImageTensor img(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        img.at(c, y, x) = static_cast<float>(row[x][2 - c]) / 255.0f;
      }
    }
  }
  return img;
}

ImageTensor preprocess_image(const ImageTensor& raw, const PreprocessSpec& spec) {
  spec.validate();
  require(raw.height() >= 1 && raw.width() >= 1, ErrorKind::InvalidArgument,
          "cannot preprocess an empty image");
  Tensor resized = bilinear_resize(raw.pixels, spec.resize_to, spec.resize_to);
  return ImageTensor(center_crop(resized, spec.crop_to));
}

Tensor load_mask(const std::filesystem::path& path) {
  cv::Mat gray;
  try {
    gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::Io, "cannot decode mask " + path.string() + ": " + e.what());
  }
  require(!gray.empty(), ErrorKind::Io, "unreadable or empty mask: " + path.string());
  const auto h = static_cast<std::size_t>(gray.rows);
  const auto w = static_cast<std::size_t>(gray.cols);
  Tensor mask({h, w});
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) mask.at(y, x) = row[x] > 0 ? 1.0f : 0.0f;
  }
  return mask;
}

Tensor preprocess_mask(const Tensor& mask, const PreprocessSpec& spec, std::size_t eval_size) {
  spec.validate();
  Tensor resized = nearest_resize(mask, spec.resize_to, spec.resize_to);
  return nearest_resize(center_crop(resized, spec.crop_to), eval_size, eval_size);
}

Tensor normalize_channels(const ImageTensor& image, const PreprocessSpec& spec) {
  Tensor out = image.pixels;
  const std::size_t plane = image.height() * image.width();
  auto data = out.data();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      float& v = data[c * plane + i];
      v = (v - spec.channel_mean[c]) / spec.channel_std[c];
    }
  }
  return out;
}

void write_gray_png(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    std::span<const std::uint8_t> pixels) {
  require(pixels.size() == height * width, ErrorKind::ShapeMismatch,
          "grayscale buffer does not match " + std::to_string(height) + "x" +
              std::to_string(width));
  cv::Mat mat(static_cast<int>(height), static_cast<int>(width), CV_8UC1);
  std::copy(pixels.begin(), pixels.end(), mat.data);
  write_png(path, mat);
}

void write_rgb_png(const std::filesystem::path& path, const ImageTensor& image) {
  cv::Mat mat(static_cast<int>(image.height()), static_cast<int>(image.width()), CV_8UC3);
  for (std::size_t y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < image.width(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        row[x][2 - c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  write_png(path, mat);
}

void write_mask_png(const std::filesystem::path& path, const Tensor& mask) {
  require(mask.rank() == 2, ErrorKind::ShapeMismatch, "mask must be 2-D");
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask.data()[i] > 0.5f ? 255 : 0;
  write_gray_png(path, mask.dim(0), mask.dim(1), bytes);
}

}  // namespace vmad
