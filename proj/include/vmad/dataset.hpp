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
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vmad {

struct Sample {
  std::filesystem::path path;
  std::string category;
  bool anomalous = false;
  std::string defect;  // "good" for normal samples
  std::optional<std::filesystem::path> mask_path;
};

struct CategoryData {
  std::vector<std::filesystem::path> train_normals;  // support pool
  std::vector<Sample> test;
};

struct Dataset {
  std::filesystem::path root;
  std::map<std::string, CategoryData> categories;
  std::vector<std::string> warnings;
};

/// MVTec-style layout:
///   <root>/<category>/train/good/*
///   <root>/<category>/test/<defect>/*        ("good" = normal)
///   <root>/<category>/ground_truth/<defect>/<stem>_mask.png
/// Images are .png/.jpg/.jpeg/.bmp or precomputed .vadf feature files.
/// Variant feature files (<stem>.<tag>.vadf) are not samples. Files are
/// listed in name order. With require_masks, an anomalous sample without a
/// mask is an error.
Dataset ingest_dataset(const std::filesystem::path& root, bool require_masks);

bool is_sample_file(const std::filesystem::path& path);

}  // namespace vmad
