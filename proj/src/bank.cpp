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

#include "vmad/bank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vmad/error.hpp"
#include "vmad/kernels.hpp"
#include "vmad/parallel.hpp"
#include "vmad/rng.hpp"
#include "vmad/tensor_records.hpp"

namespace vmad {
namespace {

using nlohmann::json;

constexpr std::string_view kBankMagic = "VADB";
constexpr std::uint16_t kBankVersion = 1;

struct WorkItem {
  const std::string* category;
  const ImageSample* sample;
  std::size_t image;
  std::size_t variant;  // 0 = original, i = support_augs[i - 1]
  std::size_t view;
};

std::string patch_record_name(const BankKey& key) {
  return "patch/v" + std::to_string(key.view) + "/" + key.category + "/g" +
         std::to_string(key.group);
}

BankKey parse_patch_record_name(const std::string& name, const std::string& source) {
  // patch/v{view}/{category}/g{group}
  const auto bad = [&] { fail(ErrorKind::Corrupt, source + ": bad record name '" + name + "'"); };
  const std::size_t a = name.find('/');
  const std::size_t b = name.find('/', a + 1);
  const std::size_t c = name.rfind('/');
  if (a == std::string::npos || b == std::string::npos || c <= b || name[a + 1] != 'v' ||
      name[c + 1] != 'g') {
    bad();
  }
  BankKey key;
  try {
    key.view = std::stoul(name.substr(a + 2, b - a - 2));
    key.group = std::stoul(name.substr(c + 2));
  } catch (const std::exception&) {
    bad();
  }
  key.category = name.substr(b + 1, c - b - 1);
  return key;
}

[[noreturn]] void rethrow_with_context(const Error& e, const WorkItem& item) {
  fail(e.kind(), "support image " + item.sample->path.string() + " (category '" + *item.category +
                     "'): " + e.what());
}

}  // namespace

const Matrix& PatchBank::memory(std::size_t view, const std::string& category,
                                std::size_t group) const {
  const auto it = memories.find(BankKey{view, category, group});
  require(it != memories.end(), ErrorKind::NotFound,
          "patch bank has no memory for view " + std::to_string(view) + ", category '" +
              category + "', group " + std::to_string(group));
  return it->second;
}

std::vector<std::string> PatchBank::categories() const {
  std::vector<std::string> out;
  for (const auto& [name, p] : provenance) out.push_back(name);
  return out;
}

json BankManifest::to_json() const {
  const json plan_json = vmad::to_json(plan);
  return {{"format", "vmad-bank"},
          {"backbone_id", backbone_id},
          {"backend", vmad::to_json(backend)},
          {"preprocess", vmad::to_json(preprocess)},
          {"fusion", vmad::to_json(fusion)},
          {"support_augs", plan_json["support_augs"]},
          {"views", plan_json["views"]},
          {"category_indexed", category_indexed},
          {"shots", shots},
          {"seed", seed},
          {"grid", {grid_h, grid_w}},
          {"layer_dim", layer_dim}};
}

BankManifest BankManifest::from_json(const json& j) {
  BankManifest m;
  try {
    require(j.at("format") == "vmad-bank", ErrorKind::Corrupt, "manifest format is not vmad-bank");
    m.backbone_id = j.at("backbone_id").get<std::string>();
    m.backend = parse_backend(j.at("backend"));
    m.preprocess = parse_preprocess(j.at("preprocess"));
    m.fusion = parse_fusion(j.at("fusion"));
    m.plan = parse_plan(j.at("support_augs"), j.at("views"));
    m.category_indexed = j.at("category_indexed").get<bool>();
    m.shots = j.at("shots").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.grid_h = j.at("grid").at(0).get<std::size_t>();
    m.grid_w = j.at("grid").at(1).get<std::size_t>();
    m.layer_dim = j.at("layer_dim").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Corrupt, std::string("invalid bank manifest: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::Corrupt, std::string("invalid bank manifest: ") + e.what());
  }
  return m;
}

std::size_t pick_global_support(std::uint64_t seed, const std::string& category,
                                std::size_t count) {
  SplitMix64 rng = category_stream(seed, category, "global-token");
  return static_cast<std::size_t>(rng.below(count));
}

MemoryBanks build_banks(const SupportSets& supports, const BankBuildOptions& options,
                        const FeatureExtractor& extractor) {
  options.plan.validate();
  options.fusion.validate();
  require(!supports.empty(), ErrorKind::InvalidArgument, "no support categories given");
  for (const auto& [category, images] : supports) {
    require(!category.empty() && category.find('/') == std::string::npos &&
                category != kMixedCategory,
            ErrorKind::InvalidArgument, "invalid category name '" + category + "'");
    require(!images.empty(), ErrorKind::InvalidArgument,
            "category '" + category + "' has no support images");
  }

  const auto& plan = options.plan;
  const std::vector<int> layers = options.fusion.layers();
  const std::size_t variants = 1 + plan.support_augs.size();

  std::vector<WorkItem> items;
  for (const auto& [category, images] : supports) {
    for (std::size_t i = 0; i < images.size(); ++i) {
      for (std::size_t a = 0; a < variants; ++a) {
        for (std::size_t v = 0; v < plan.views.size(); ++v) {
          items.push_back({&category, &images[i], i, a, v});
        }
      }
    }
  }

  struct Extracted {
    std::vector<FusedPatches> groups;
    std::string backbone_id;
    std::size_t dim = 0;
  };
  std::vector<Extracted> results(items.size());
  parallel_for(items.size(), [&](std::size_t k) {
    const WorkItem& item = items[k];
    TransformChain chain;
    if (item.variant > 0) chain.support = plan.support_augs[item.variant - 1];
    chain.view = plan.views[item.view];
    try {
      FeatureStack stack = extract_features(extractor, *item.sample, chain, layers);
      results[k] = {fuse_groups(stack, options.fusion), stack.backbone_id, stack.dim()};
    } catch (const Error& e) {
      rethrow_with_context(e, item);
    }
  });

  MemoryBanks banks;
  BankManifest& m = banks.manifest;
  m.backbone_id = results.front().backbone_id;
  m.preprocess = options.preprocess;
  m.backend = options.backend;
  m.fusion = options.fusion;
  m.plan = plan;
  m.category_indexed = options.category_indexed;
  m.seed = options.seed;
  m.grid_h = results.front().groups.front().grid_h;
  m.grid_w = results.front().groups.front().grid_w;
  m.layer_dim = results.front().dim;
  m.shots = 0;

  for (std::size_t k = 0; k < items.size(); ++k) {
    const WorkItem& item = items[k];
    const Extracted& r = results[k];
    require(r.backbone_id == m.backbone_id, ErrorKind::InvalidArgument,
            item.sample->path.string() + ": backbone '" + r.backbone_id + "' differs from '" +
                m.backbone_id + "'");
    const auto& g0 = r.groups.front();
    require(g0.grid_h == m.grid_h && g0.grid_w == m.grid_w && r.dim == m.layer_dim,
            ErrorKind::ShapeMismatch,
            item.sample->path.string() + ": feature grid " + std::to_string(g0.grid_h) + "x" +
                std::to_string(g0.grid_w) + " differs from " + std::to_string(m.grid_h) + "x" +
                std::to_string(m.grid_w));
    const std::string bank_category =
        options.category_indexed ? *item.category : std::string(kMixedCategory);
    for (const auto& fused : r.groups) {
      banks.patches.memories[BankKey{item.view, bank_category, fused.group_id}].append_rows(
          fused.matrix);
    }
  }

  for (const auto& [category, images] : supports) {
    m.shots = std::max(m.shots, images.size());
    const std::string bank_category =
        options.category_indexed ? category : std::string(kMixedCategory);
    auto& prov = banks.patches.provenance[bank_category];
    prov.supports += images.size();
    prov.variants += images.size() * variants;

    if (!options.category_indexed) continue;
    const std::size_t pick = pick_global_support(options.seed, category, images.size());
    FeatureStack stack;
    try {
      stack = extract_features(extractor, images[pick], TransformChain{}, layers);
    } catch (const Error& e) {
      fail(e.kind(), "support image " + images[pick].path.string() + " (category '" + category +
                         "'): " + e.what());
    }
    std::vector<float> token = stack.cls_token;
    l2_normalize(token);
    banks.globals.tokens[category] = std::move(token);
  }
  return banks;
}

std::string retrieve_category(std::span<const float> cls, const GlobalBank& bank) {
  require(!bank.tokens.empty(), ErrorKind::InvalidArgument, "global bank is empty");
  std::vector<float> q(cls.begin(), cls.end());
  l2_normalize(q);

  const std::string* best = nullptr;
  double best_distance = 0.0;
  for (const auto& [category, token] : bank.tokens) {
    require(token.size() == q.size(), ErrorKind::ShapeMismatch,
            "class token has dimension " + std::to_string(q.size()) + " but category '" +
                category + "' stores " + std::to_string(token.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) dot += static_cast<double>(q[i]) * token[i];
    const double distance = 1.0 - dot;
    if (best == nullptr || distance < best_distance) {
      best = &category;
      best_distance = distance;
    }
  }
  return *best;
}

std::vector<char> serialize_bank(const MemoryBanks& banks) {
  json manifest = banks.manifest.to_json();
  json categories = json::object();
  for (const auto& [name, p] : banks.patches.provenance) {
    categories[name] = {{"supports", p.supports}, {"variants", p.variants}};
  }
  manifest["categories"] = categories;
  const std::string text = manifest.dump();

  const std::size_t count = banks.patches.memories.size() + banks.globals.tokens.size();
  require(count <= 0xFFFF, ErrorKind::InvalidArgument, "too many bank tensors for one file");

  ByteWriter w;
  w.raw(kBankMagic);
  w.u16(kBankVersion);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.raw(text);
  w.u16(static_cast<std::uint16_t>(count));
  for (const auto& [key, matrix] : banks.patches.memories) {
    TensorRecord r;
    r.name = patch_record_name(key);
    r.dims = {static_cast<std::uint32_t>(matrix.rows()), static_cast<std::uint32_t>(matrix.cols())};
    r.values.assign(matrix.data().begin(), matrix.data().end());
    w.record(r);
  }
  for (const auto& [category, token] : banks.globals.tokens) {
    w.record(TensorRecord{"global/" + category, {static_cast<std::uint32_t>(token.size())}, token, {}});
  }
  return w.bytes();
}

void save_bank(const std::filesystem::path& path, const MemoryBanks& banks) {
  const std::vector<char> bytes = serialize_bank(banks);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  require(static_cast<bool>(out), ErrorKind::Io, "failed writing " + path.string());
}

MemoryBanks load_bank(const std::filesystem::path& path) {
  ByteReader in = ByteReader::from_file(path);
  in.expect_header(kBankMagic, kBankVersion);
  const std::string text = in.raw(in.u32());
  json manifest_json;
  try {
    manifest_json = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Corrupt, path.string() + ": manifest is not valid JSON: " + e.what());
  }

  MemoryBanks banks;
  banks.manifest = BankManifest::from_json(manifest_json);
  try {
    for (const auto& [name, p] : manifest_json.at("categories").items()) {
      banks.patches.provenance[name] = {p.at("supports").get<std::size_t>(),
                                        p.at("variants").get<std::size_t>()};
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Corrupt, path.string() + ": bad category provenance: " + e.what());
  }

  const std::uint16_t count = in.u16();
  for (std::uint16_t i = 0; i < count; ++i) {
    TensorRecord r = in.record();
    if (r.name.rfind("patch/", 0) == 0) {
      require(r.dims.size() == 2, ErrorKind::Corrupt, path.string() + ": " + r.name + " must be 2-D");
      banks.patches.memories[parse_patch_record_name(r.name, path.string())] =
          Matrix(r.dims[0], r.dims[1], std::move(r.values));
    } else if (r.name.rfind("global/", 0) == 0) {
      require(r.dims.size() == 1, ErrorKind::Corrupt, path.string() + ": " + r.name + " must be 1-D");
      banks.globals.tokens[r.name.substr(7)] = std::move(r.values);
    } else {
      fail(ErrorKind::Corrupt, path.string() + ": unexpected record '" + r.name + "'");
    }
  }
  require(in.at_end(), ErrorKind::Corrupt, path.string() + ": trailing bytes after last record");

  // Cross-check records against the manifest.
  const BankManifest& m = banks.manifest;
  const std::size_t groups = m.fusion.effective_groups().size();
  const std::size_t patches_per_image = m.grid_h * m.grid_w;
  require(banks.patches.memories.size() == banks.patches.provenance.size() * m.plan.views.size() * groups,
          ErrorKind::Corrupt, path.string() + ": patch records do not match the manifest");
  for (const auto& [name, prov] : banks.patches.provenance) {
    for (std::size_t v = 0; v < m.plan.views.size(); ++v) {
      for (std::size_t g = 0; g < groups; ++g) {
        const auto it = banks.patches.memories.find(BankKey{v, name, g});
        require(it != banks.patches.memories.end(), ErrorKind::Corrupt,
                path.string() + ": missing record " + patch_record_name(BankKey{v, name, g}));
        require(it->second.rows() == prov.variants * patches_per_image &&
                    it->second.cols() == m.layer_dim * m.fusion.effective_groups()[g].size(),
                ErrorKind::Corrupt,
                path.string() + ": record " + patch_record_name(it->first) + " has shape " +
                    it->second.shape() + " inconsistent with the manifest");
      }
    }
  }
  if (m.category_indexed) {
    require(banks.globals.tokens.size() == banks.patches.provenance.size(), ErrorKind::Corrupt,
            path.string() + ": global bank does not cover every category");
  }
  return banks;
}

void check_manifest(const BankManifest& manifest, const EngineConfig& config) {
  std::vector<std::string> diffs;
  if (!(manifest.preprocess == config.preprocess)) {
    diffs.push_back("preprocess: bank " + to_json(manifest.preprocess).dump() + " vs config " +
                    to_json(config.preprocess).dump());
  }
  if (!(manifest.fusion == config.fusion)) {
    diffs.push_back("fusion: bank " + to_json(manifest.fusion).dump() + " vs config " +
                    to_json(config.fusion).dump());
  }
  const AugmentationPlan plan = config.effective_plan();
  if (!(manifest.plan == plan)) {
    diffs.push_back("augmentation plan: bank " + to_json(manifest.plan).dump() + " vs config " +
                    to_json(plan).dump());
  }
  if (manifest.category_indexed != config.ablation.cimb) {
    diffs.push_back(std::string("category indexing: bank ") +
                    (manifest.category_indexed ? "on" : "off") + " vs config " +
                    (config.ablation.cimb ? "on" : "off"));
  }
  if (config.backbone_id && *config.backbone_id != manifest.backbone_id) {
    diffs.push_back("backbone: bank '" + manifest.backbone_id + "' vs config '" +
                    *config.backbone_id + "'");
  }
  if (diffs.empty()) return;
  std::string msg = "bank was built with a different configuration:";
  for (const auto& d : diffs) msg += "\n  " + d;
  fail(ErrorKind::ManifestMismatch, msg);
}

}  // namespace vmad
