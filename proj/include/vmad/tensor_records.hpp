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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vmad {

/// One named record of the little-endian tensor container shared by
/// feature (.vadf) and bank (.vadb) files:
///   u16 name_len, name, u8 ndim, u32 dims[ndim], payload.
/// The payload is f32 row-major, except for the record named "meta" whose
/// payload is raw UTF-8 bytes (ndim = 1).
struct TensorRecord {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
  std::string bytes;

  bool is_meta() const { return name == "meta"; }
  std::size_t element_count() const;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void raw(std::string_view s);
  void f32s(std::span<const float> values);
  void record(const TensorRecord& r);

  const std::vector<char>& bytes() const { return buf_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<char> buf_;
};

/// Bounds-checked reader; running past the end raises ErrorKind::Truncated.
class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string source);
  static ByteReader from_file(const std::filesystem::path& path);

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::string raw(std::size_t n);
  std::vector<float> f32s(std::size_t n);
  TensorRecord record();

  /// Reads 4 magic bytes and a u16 version; distinct errors for each.
  void expect_header(std::string_view magic, std::uint16_t version);

  bool at_end() const { return pos_ == data_.size(); }
  const std::string& source() const { return source_; }

 private:
  void need(std::size_t n, std::string_view what);

  std::vector<char> data_;
  std::size_t pos_ = 0;
  std::string source_;
};

}  // namespace vmad
