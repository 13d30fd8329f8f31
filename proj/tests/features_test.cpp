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

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "support.hpp"
#include "vmad/error.hpp"
#include "vmad/extractor.hpp"
#include "vmad/features.hpp"
#include "vmad/image.hpp"
#include "vmad/tensor_records.hpp"

namespace vmad {
namespace {

using testing::TempDir;

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::Io;
}

void write_raw(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TEST(Preprocess, OutputSizeDependsOnlyOnSpec) {
  ImageTensor raw(800, 1000, 0.3f);
  const ImageTensor out = preprocess_image(raw, PreprocessSpec{});
  EXPECT_EQ(out.pixels.dims(), (std::vector<std::size_t>{3, 392, 392}));
  const ImageTensor small = preprocess_image(ImageTensor(17, 5, 0.3f), PreprocessSpec{});
  EXPECT_EQ(small.pixels.dims(), out.pixels.dims());
}

TEST(Preprocess, SameSizeIsPassthrough) {
  std::mt19937_64 rng(1);
  const ImageTensor raw(testing::random_tensor(rng, {3, 392, 392}));
  PreprocessSpec spec;
  spec.resize_to = 392;
  spec.crop_to = 392;
  EXPECT_EQ(preprocess_image(raw, spec), raw);
}

TEST(Preprocess, ConstantGrayStaysGray) {
  const ImageTensor out = preprocess_image(ImageTensor(300, 200, 0.5f), PreprocessSpec{});
  for (float v : out.pixels.data()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(Preprocess, SpecValidation) {
  PreprocessSpec spec;
  spec.crop_to = 500;
  EXPECT_THROW(spec.validate(), Error);
  spec = {};
  spec.channel_std[1] = 0.0f;
  EXPECT_THROW(spec.validate(), Error);
}

TEST(Image, UnreadableFileNamesPath) {
  TempDir dir;
  write_raw(dir / "broken.png", {'n', 'o', 'p', 'e'});
  try {
    load_image(dir / "broken.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find("broken.png"), std::string::npos);
  }
}

TEST(Image, PngRoundTripAndMask) {
  TempDir dir;
  ImageTensor img(4, 6);
  img.at(0, 1, 2) = 1.0f;
  img.at(2, 3, 5) = 1.0f;
  write_rgb_png(dir / "x.png", img);
  EXPECT_EQ(load_image(dir / "x.png"), img);

  Tensor mask({5, 5});
  mask.at(2, 3) = 1.0f;
  write_mask_png(dir / "m.png", mask);
  EXPECT_EQ(load_mask(dir / "m.png"), mask);
}

TEST(Image, MaskFollowsImageGeometry) {
  // A mask covering the right half stays on the right half after
  // resize + center crop + eval resize.
  Tensor mask({100, 100});
  for (std::size_t y = 0; y < 100; ++y) {
    for (std::size_t x = 50; x < 100; ++x) mask.at(y, x) = 1.0f;
  }
  PreprocessSpec spec;
  spec.resize_to = 64;
  spec.crop_to = 48;
  const Tensor out = preprocess_mask(mask, spec, 32);
  ASSERT_EQ(out.dims(), (std::vector<std::size_t>{32, 32}));
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) EXPECT_EQ(out.at(y, x), x >= 16 ? 1.0f : 0.0f);
  }
}

TEST(Image, NormalizeChannels) {
  const Tensor t = normalize_channels(ImageTensor(2, 2, 0.485f), PreprocessSpec{});
  EXPECT_NEAR(t.data()[0], 0.0f, 1e-6);
  EXPECT_NEAR(t.data()[4], (0.485f - 0.456f) / 0.224f, 1e-6);
}

TEST(FeatureFile, RoundTripIsBitExact) {
  TempDir dir;
  std::mt19937_64 rng(2);
  const FeatureStack s = testing::random_stack(rng, {3, 4, 12}, 5, 7, 9, "dinov2-test");
  write_feature_file(dir / "a.vadf", s);
  EXPECT_EQ(read_feature_file(dir / "a.vadf"), s);
}

TEST(FeatureFile, LayoutMatchesFormat) {
  TempDir dir;
  FeatureStack s;
  s.backbone_id = "b";
  s.layers.push_back({7, Tensor({1, 1, 2}, {1.0f, 2.0f})});
  s.cls_token = {0.5f, 0.25f};
  write_feature_file(dir / "a.vadf", s);
  const auto bytes = testing::read_bytes(dir / "a.vadf");
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(std::string(bytes.data(), 4), "VADF");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 3);  // layer_07, cls, meta
  // First record: u16 name length 8, "layer_07".
  EXPECT_EQ(bytes[8], 8);
  EXPECT_EQ(std::string(bytes.data() + 10, 8), "layer_07");
  EXPECT_EQ(bytes[18], 3);  // ndim
}

TEST(FeatureFile, DistinctErrorKinds) {
  TempDir dir;
  std::mt19937_64 rng(3);
  write_feature_file(dir / "ok.vadf", testing::random_stack(rng, {1, 2}, 2, 2, 3));
  auto bytes = testing::read_bytes(dir / "ok.vadf");

  auto bad_magic = bytes;
  std::copy_n("XXXX", 4, bad_magic.begin());
  write_raw(dir / "magic.vadf", bad_magic);
  EXPECT_EQ(kind_of([&] { read_feature_file(dir / "magic.vadf"); }), ErrorKind::BadMagic);

  auto bad_version = bytes;
  bad_version[4] = 2;
  write_raw(dir / "version.vadf", bad_version);
  EXPECT_EQ(kind_of([&] { read_feature_file(dir / "version.vadf"); }),
            ErrorKind::VersionMismatch);

  for (std::size_t cut : {std::size_t{3}, std::size_t{7}, bytes.size() / 2, bytes.size() - 1}) {
    write_raw(dir / "short.vadf", std::vector<char>(bytes.begin(), bytes.begin() + long(cut)));
    EXPECT_EQ(kind_of([&] { read_feature_file(dir / "short.vadf"); }), ErrorKind::Truncated)
        << "cut at " << cut;
  }

  auto trailing = bytes;
  trailing.push_back(0);
  write_raw(dir / "trailing.vadf", trailing);
  EXPECT_EQ(kind_of([&] { read_feature_file(dir / "trailing.vadf"); }), ErrorKind::Corrupt);

  EXPECT_EQ(kind_of([&] { read_feature_file(dir / "missing.vadf"); }), ErrorKind::NotFound);
}

TEST(FeatureFile, MissingClsIsCorrupt) {
  TempDir dir;
  ByteWriter w;
  w.raw("VADF");
  w.u16(1);
  w.u16(1);
  w.record({"layer_01", {1, 1, 2}, {1.0f, 2.0f}, {}});
  w.save(dir / "nocls.vadf");
  EXPECT_EQ(kind_of([&] { read_feature_file(dir / "nocls.vadf"); }), ErrorKind::Corrupt);
}

TEST(FeatureStack, ValidationAndSelection) {
  std::mt19937_64 rng(4);
  FeatureStack s = testing::random_stack(rng, {2, 5, 9}, 3, 3, 4);
  EXPECT_NO_THROW(s.validate());
  const FeatureStack sub = s.select({9, 2});
  ASSERT_EQ(sub.layers.size(), 2u);
  EXPECT_EQ(sub.layers[0].layer_index, 2);
  EXPECT_EQ(sub.layers[1].layer_index, 9);
  try {
    s.layer(7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    EXPECT_NE(std::string(e.what()).find("layer_07"), std::string::npos);
  }
  s.layers[1].values = Tensor({3, 3, 5});
  EXPECT_EQ(kind_of([&] { s.validate(); }), ErrorKind::ShapeMismatch);
}

TEST(ExtractFeatures, PassthroughBackendEchoesTensors) {
  std::mt19937_64 rng(5);
  const FeatureStack s = testing::random_stack(rng, {3, 4, 5}, 4, 4, 6);
  testing::TableExtractor table;
  table.add("img", s);
  EXPECT_EQ(extract_features(table, {"img", std::nullopt}, {}, {3, 4, 5}), s);
}

TEST(ExtractFeatures, MissingLayerIsNamed) {
  std::mt19937_64 rng(6);
  testing::TableExtractor table;
  table.add("img", testing::random_stack(rng, {1, 2, 3}, 2, 2, 2));
  try {
    extract_features(table, {"img", std::nullopt}, {}, {2, 99});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    EXPECT_NE(std::string(e.what()).find("layer_99"), std::string::npos);
  }
}

TEST(FileBackend, PathMapping) {
  FileFeatureBackend plain;
  EXPECT_EQ(plain.base_path("/d/cat/test/good/001.png"), "/d/cat/test/good/001.vadf");
  EXPECT_EQ(plain.base_path("/d/x.vadf"), "/d/x.vadf");
  FileFeatureBackend rooted("/feat", "/d");
  EXPECT_EQ(rooted.base_path("/d/cat/test/good/001.png"), "/feat/cat/test/good/001.vadf");
  TransformChain chain{SupportAug::Rot90, ViewTransform::pos_clamp(0.5f)};
  EXPECT_EQ(rooted.variant_path("/d/cat/a.png", chain), "/feat/cat/a.rot90.pos_clamp0.5.vadf");
}

TEST(FileBackend, VariantFileWinsOverDerivedGrid) {
  TempDir dir;
  std::mt19937_64 rng(7);
  const FeatureStack base = testing::random_stack(rng, {1}, 3, 3, 2);
  const FeatureStack variant = testing::random_stack(rng, {1}, 3, 3, 2);
  write_feature_file(dir / "a.vadf", base);
  write_feature_file(dir / "a.yflip.vadf", variant);

  FileFeatureBackend backend;
  const ImageSample sample{dir / "a.png", std::nullopt};
  EXPECT_EQ(backend.extract(sample, {}, {1}), base);
  EXPECT_EQ(backend.extract(sample, {std::nullopt, ViewTransform::yflip()}, {1}), variant);

  // No rot180 file: the grid is permuted instead.
  const FeatureStack rotated = backend.extract(sample, {SupportAug::Rot180, {}}, {1});
  const Tensor& b = base.layers[0].values;
  const Tensor& r = rotated.layers[0].values;
  for (std::size_t y = 0; y < 3; ++y) {
    for (std::size_t x = 0; x < 3; ++x) {
      for (std::size_t d = 0; d < 2; ++d) {
        EXPECT_EQ(r.data()[(y * 3 + x) * 2 + d], b.data()[((2 - y) * 3 + (2 - x)) * 2 + d]);
      }
    }
  }
  // Photometric views without a variant file return the base features.
  EXPECT_EQ(backend.extract(sample, {std::nullopt, ViewTransform::rb_swap()}, {1}), base);
}

TEST(FileBackend, MissingFileIsNotFound) {
  FileFeatureBackend backend;
  EXPECT_EQ(kind_of([&] { backend.extract({"/nowhere/x.png", std::nullopt}, {}, {1}); }),
            ErrorKind::NotFound);
}

TEST(MakeExtractor, OnnxNeedsBuildSupport) {
  BackendConfig cfg;
  cfg.kind = "onnx";
  cfg.model = "model.onnx";
#ifndef VMAD_WITH_ONNX
  EXPECT_EQ(kind_of([&] { make_extractor(cfg, {}); }), ErrorKind::Unsupported);
#endif
  cfg.kind = "tpu";
  EXPECT_EQ(kind_of([&] { make_extractor(cfg, {}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(make_extractor(BackendConfig{}, {})->kind(), "files");
}

}  // namespace
}  // namespace vmad
