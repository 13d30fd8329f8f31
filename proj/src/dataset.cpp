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

#include "vmad/dataset.hpp"

#include <algorithm>
#include <set>

#include "vmad/error.hpp"

namespace vmad {
namespace {

namespace fs = std::filesystem;

std::vector<fs::path> list_samples(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_sample_file(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> list_dirs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<fs::path> find_mask(const fs::path& gt_dir, const fs::path& sample) {
  for (const char* ext : {".png", ".bmp", ".jpg", ".jpeg"}) {
    const fs::path p = gt_dir / (sample.stem().string() + "_mask" + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

bool is_sample_file(const fs::path& path) {
  static const std::set<std::string> kExtensions{".png", ".jpg", ".jpeg", ".bmp", ".vadf"};
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (kExtensions.count(ext) == 0) return false;
  // "<stem>.<tag>.vadf" are transform variants of "<stem>.vadf".
  return !(ext == ".vadf" && path.stem().has_extension());
}

Dataset ingest_dataset(const fs::path& root, bool require_masks) {
  require(fs::is_directory(root), ErrorKind::NotFound, "dataset root " + root.string() + " does not exist");
  Dataset ds;
  ds.root = root;
  for (const auto& cat_dir : list_dirs(root)) {
    const std::string name = cat_dir.filename().string();
    CategoryData data;
    data.train_normals = list_samples(cat_dir / "train" / "good");
    if (data.train_normals.empty()) {
      ds.warnings.push_back("category '" + name + "' has no train/good images; skipped");
      continue;
    }
    const fs::path test_dir = cat_dir / "test";
    if (fs::is_directory(test_dir)) {
      for (const auto& defect_dir : list_dirs(test_dir)) {
        const std::string defect = defect_dir.filename().string();
        const bool anomalous = defect != "good";
        for (const auto& p : list_samples(defect_dir)) {
          Sample s{p, name, anomalous, defect, std::nullopt};
          if (anomalous) {
            s.mask_path = find_mask(cat_dir / "ground_truth" / defect, p);
            if (!s.mask_path && require_masks) {
              fail(ErrorKind::NotFound, "missing ground-truth mask for anomalous sample " +
                                            p.string() + " (expected " +
                                            (cat_dir / "ground_truth" / defect /
                                             (p.stem().string() + "_mask.png"))
                                                .string() +
                                            ")");
            }
          }
          data.test.push_back(std::move(s));
        }
      }
    }
    if (data.test.empty()) ds.warnings.push_back("category '" + name + "' has no test samples");
    ds.categories.emplace(name, std::move(data));
  }
  require(!ds.categories.empty(), ErrorKind::NotFound, "no categories found under " + root.string());
  return ds;
}

}  // namespace vmad
