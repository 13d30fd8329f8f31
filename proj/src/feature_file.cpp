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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include <json.hpp>

#include "vmad/error.hpp"
#include "vmad/features.hpp"
#include "vmad/tensor_records.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor containers are written with host byte order; add swapping for big-endian hosts");

namespace vmad {
namespace {

constexpr std::string_view kFeatureMagic = "VADF";
constexpr std::uint16_t kFeatureVersion = 1;

template <typename T>
void put(std::vector<char>& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

}  // namespace

std::size_t TensorRecord::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void ByteWriter::u8(std::uint8_t v) { put(buf_, v); }
void ByteWriter::u16(std::uint16_t v) { put(buf_, v); }
void ByteWriter::u32(std::uint32_t v) { put(buf_, v); }
void ByteWriter::raw(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

void ByteWriter::f32s(std::span<const float> values) {
  const auto* p = reinterpret_cast<const char*>(values.data());
  buf_.insert(buf_.end(), p, p + values.size_bytes());
}

void ByteWriter::record(const TensorRecord& r) {
  require(r.name.size() <= 0xFFFF, ErrorKind::InvalidArgument, "tensor name too long");
  require(r.dims.size() <= 0xFF, ErrorKind::InvalidArgument, "too many tensor dimensions");
  u16(static_cast<std::uint16_t>(r.name.size()));
  raw(r.name);
  u8(static_cast<std::uint8_t>(r.dims.size()));
  for (auto d : r.dims) u32(d);
  if (r.is_meta()) {
    require(r.dims.size() == 1 && r.dims[0] == r.bytes.size(), ErrorKind::InvalidArgument,
            "meta record dims must be [byte_count]");
    raw(r.bytes);
  } else {
    require(r.values.size() == r.element_count(), ErrorKind::ShapeMismatch,
            "record '" + r.name + "' payload does not match its dims");
    f32s(r.values);
  }
}

void ByteWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  out.close();
  require(static_cast<bool>(out), ErrorKind::Io, "failed writing " + path.string());
}

ByteReader::ByteReader(std::vector<char> data, std::string source)
    : data_(std::move(data)), source_(std::move(source)) {}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::NotFound, "cannot open " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ByteReader(std::move(data), path.string());
}

void ByteReader::need(std::size_t n, std::string_view what) {
  if (data_.size() - pos_ < n) {
    fail(ErrorKind::Truncated, source_ + ": truncated while reading " + std::string(what) +
                                   " at byte " + std::to_string(pos_));
  }
}

std::uint8_t ByteReader::u8() {
  need(1, "u8");
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint16_t ByteReader::u16() {
  need(2, "u16");
  std::uint16_t v;
  std::memcpy(&v, data_.data() + pos_, 2);
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  std::uint32_t v;
  std::memcpy(&v, data_.data() + pos_, 4);
  pos_ += 4;
  return v;
}

std::string ByteReader::raw(std::size_t n) {
  need(n, "bytes");
  std::string s(data_.data() + pos_, n);
  pos_ += n;
  return s;
}

std::vector<float> ByteReader::f32s(std::size_t n) {
  require(n <= (data_.size() - pos_) / sizeof(float), ErrorKind::Truncated,
          source_ + ": truncated tensor payload at byte " + std::to_string(pos_));
  std::vector<float> v(n);
  std::memcpy(v.data(), data_.data() + pos_, n * sizeof(float));
  pos_ += n * sizeof(float);
  return v;
}

TensorRecord ByteReader::record() {
  TensorRecord r;
  r.name = raw(u16());
  const std::uint8_t ndim = u8();
  r.dims.resize(ndim);
  for (auto& d : r.dims) d = u32();
  if (r.is_meta()) {
    require(ndim == 1, ErrorKind::Corrupt, source_ + ": meta record must be 1-D");
    r.bytes = raw(r.dims[0]);
  } else {
    r.values = f32s(r.element_count());
    for (float v : r.values) {
      require(std::isfinite(v), ErrorKind::Corrupt,
              source_ + ": non-finite value in tensor '" + r.name + "'");
    }
  }
  return r;
}

void ByteReader::expect_header(std::string_view magic, std::uint16_t version) {
  need(magic.size(), "magic");
  const std::string got = raw(magic.size());
  require(got == magic, ErrorKind::BadMagic,
          source_ + ": expected magic '" + std::string(magic) + "'");
  const std::uint16_t v = u16();
  require(v == version, ErrorKind::VersionMismatch,
          source_ + ": unsupported version " + std::to_string(v) + " (expected " +
              std::to_string(version) + ")");
}

// --- FeatureStack -----------------------------------------------------------

void FeatureStack::validate() const {
  require(!layers.empty(), ErrorKind::InvalidArgument, "feature stack has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    require(l.values.rank() == 3, ErrorKind::ShapeMismatch,
            layer_tensor_name(l.layer_index) + " must be [grid_h, grid_w, dim], got " +
                shape_string(l.values.dims()));
    require(l.grid_h() * l.grid_w() >= 1 && l.dim() >= 1, ErrorKind::ShapeMismatch,
            layer_tensor_name(l.layer_index) + " is empty");
    require(l.grid_h() == layers[0].grid_h() && l.grid_w() == layers[0].grid_w() &&
                l.dim() == layers[0].dim(),
            ErrorKind::ShapeMismatch,
            "inconsistent layer shapes: " + layer_tensor_name(l.layer_index) + " " +
                shape_string(l.values.dims()) + " vs " + layer_tensor_name(layers[0].layer_index) +
                " " + shape_string(layers[0].values.dims()));
    if (i > 0) {
      require(l.layer_index > layers[i - 1].layer_index, ErrorKind::InvalidArgument,
              "layer indices must be strictly increasing");
    }
  }
  require(!cls_token.empty(), ErrorKind::InvalidArgument, "feature stack has no class token");
}

bool FeatureStack::has_layer(int index) const {
  return std::any_of(layers.begin(), layers.end(),
                     [&](const LayerFeatures& l) { return l.layer_index == index; });
}

const LayerFeatures& FeatureStack::layer(int index) const {
  for (const auto& l : layers) {
    if (l.layer_index == index) return l;
  }
  fail(ErrorKind::NotFound, "layer " + std::to_string(index) + " (" + layer_tensor_name(index) +
                                ") missing from features of backbone '" + backbone_id + "'");
}

FeatureStack FeatureStack::select(const std::vector<int>& indices) const {
  std::set<int> wanted(indices.begin(), indices.end());
  FeatureStack out;
  out.cls_token = cls_token;
  out.backbone_id = backbone_id;
  for (int idx : wanted) out.layers.push_back(layer(idx));
  return out;
}

std::string layer_tensor_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "layer_%02d", index);
  return buf;
}

void write_feature_file(const std::filesystem::path& path, const FeatureStack& stack) {
  stack.validate();
  ByteWriter w;
  w.raw(kFeatureMagic);
  w.u16(kFeatureVersion);
  w.u16(static_cast<std::uint16_t>(stack.layers.size() + 2));
  for (const auto& l : stack.layers) {
    TensorRecord r;
    r.name = layer_tensor_name(l.layer_index);
    for (auto d : l.values.dims()) r.dims.push_back(static_cast<std::uint32_t>(d));
    r.values.assign(l.values.data().begin(), l.values.data().end());
    w.record(r);
  }
  TensorRecord cls{"cls", {static_cast<std::uint32_t>(stack.cls_token.size())}, stack.cls_token, {}};
  w.record(cls);
  TensorRecord meta;
  meta.name = "meta";
  meta.bytes = nlohmann::json{{"backbone_id", stack.backbone_id}}.dump();
  meta.dims = {static_cast<std::uint32_t>(meta.bytes.size())};
  w.record(meta);
  w.save(path);
}

FeatureStack read_feature_file(const std::filesystem::path& path) {
  ByteReader in = ByteReader::from_file(path);
  in.expect_header(kFeatureMagic, kFeatureVersion);
  const std::uint16_t count = in.u16();

  FeatureStack stack;
  std::map<int, LayerFeatures> layers;
  bool have_cls = false;
  for (std::uint16_t i = 0; i < count; ++i) {
    TensorRecord r = in.record();
    if (r.name == "cls") {
      require(r.dims.size() == 1, ErrorKind::Corrupt, path.string() + ": cls must be 1-D");
      stack.cls_token = std::move(r.values);
      have_cls = true;
    } else if (r.is_meta()) {
      try {
        const auto meta = nlohmann::json::parse(r.bytes);
        stack.backbone_id = meta.value("backbone_id", std::string{});
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Corrupt, path.string() + ": invalid meta JSON: " + e.what());
      }
    } else if (r.name.rfind("layer_", 0) == 0) {
      int index = 0;
      try {
        index = std::stoi(r.name.substr(6));
      } catch (const std::exception&) {
        fail(ErrorKind::Corrupt, path.string() + ": bad layer tensor name '" + r.name + "'");
      }
      require(r.dims.size() == 3, ErrorKind::Corrupt,
              path.string() + ": " + r.name + " must be [grid_h, grid_w, dim]");
      std::vector<std::size_t> dims(r.dims.begin(), r.dims.end());
      layers[index] = LayerFeatures{index, Tensor(std::move(dims), std::move(r.values))};
    } else {
      fail(ErrorKind::Corrupt, path.string() + ": unexpected tensor '" + r.name + "'");
    }
  }
  require(in.at_end(), ErrorKind::Corrupt, path.string() + ": trailing bytes after last tensor");
  require(have_cls, ErrorKind::Corrupt, path.string() + ": missing 'cls' tensor");
  for (auto& [idx, l] : layers) stack.layers.push_back(std::move(l));
  try {
    stack.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Corrupt, path.string() + ": " + e.what());
  }
  return stack;
}

}  // namespace vmad
