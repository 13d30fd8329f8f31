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

#include "vmad/config.hpp"

#include <fstream>
#include <set>

#include "vmad/error.hpp"

namespace vmad {
namespace {

using nlohmann::json;

void check_object(const json& j, const std::string& context, const std::set<std::string>& allowed) {
  require(j.is_object(), ErrorKind::InvalidArgument, context + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    require(allowed.count(key) == 1, ErrorKind::InvalidArgument,
            "unknown key '" + key + "' in " + context);
  }
}

template <typename T>
T get_as(const json& j, const std::string& key, const std::string& context) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::InvalidArgument, context + "." + key + " has the wrong type");
  }
}

std::size_t get_size(const json& j, const std::string& key, const std::string& context) {
  const json& v = j.at(key);
  require(v.is_number_integer() && v.get<long long>() >= 1, ErrorKind::InvalidArgument,
          context + "." + key + " must be a positive integer");
  return v.get<std::size_t>();
}

std::array<float, 3> get_triple(const json& j, const std::string& key, const std::string& context) {
  const json& v = j.at(key);
  require(v.is_array() && v.size() == 3, ErrorKind::InvalidArgument,
          context + "." + key + " must be an array of 3 numbers");
  std::array<float, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    require(v[i].is_number(), ErrorKind::InvalidArgument,
            context + "." + key + " must be an array of 3 numbers");
    out[i] = v[i].get<float>();
  }
  return out;
}

}  // namespace

AugmentationPlan EngineConfig::effective_plan() const {
  AugmentationPlan p = plan;
  if (!ablation.support_aug) p.support_augs.clear();
  if (!ablation.pmvt) p.views = {ViewTransform::identity()};
  return p;
}

void EngineConfig::validate() const {
  preprocess.validate();
  fusion.validate();
  plan.validate();
  require(eval_resolution >= 1, ErrorKind::InvalidArgument, "eval_resolution must be positive");
  require(backend.kind == "files" || backend.kind == "onnx", ErrorKind::InvalidArgument,
          "backend.kind must be 'files' or 'onnx'");
  require(backend.kind != "onnx" || !backend.model.empty(), ErrorKind::InvalidArgument,
          "backend.model is required for the onnx backend");
}

json to_json(const PreprocessSpec& spec) {
  return {{"resize_to", spec.resize_to},
          {"crop_to", spec.crop_to},
          {"mean", spec.channel_mean},
          {"std", spec.channel_std}};
}

PreprocessSpec parse_preprocess(const json& j) {
  const std::string ctx = "preprocess";
  check_object(j, ctx, {"resize_to", "crop_to", "mean", "std"});
  PreprocessSpec s;
  if (j.contains("resize_to")) s.resize_to = get_size(j, "resize_to", ctx);
  if (j.contains("crop_to")) s.crop_to = get_size(j, "crop_to", ctx);
  if (j.contains("mean")) s.channel_mean = get_triple(j, "mean", ctx);
  if (j.contains("std")) s.channel_std = get_triple(j, "std", ctx);
  s.validate();
  return s;
}

json to_json(const FusionSpec& spec) {
  return {{"scheme", std::string(to_string(spec.scheme))}, {"groups", spec.groups}};
}

FusionSpec parse_fusion(const json& j) {
  const std::string ctx = "fusion";
  check_object(j, ctx, {"scheme", "groups"});
  FusionSpec s;
  if (j.contains("scheme")) s.scheme = parse_fusion_scheme(get_as<std::string>(j, "scheme", ctx));
  if (j.contains("groups")) {
    const json& g = j.at("groups");
    require(g.is_array(), ErrorKind::InvalidArgument, "fusion.groups must be a list of lists");
    s.groups.clear();
    for (const auto& group : g) {
      require(group.is_array(), ErrorKind::InvalidArgument,
              "fusion.groups must be a list of lists");
      std::vector<int> layers;
      for (const auto& idx : group) {
        require(idx.is_number_integer(), ErrorKind::InvalidArgument,
                "fusion.groups entries must be integers");
        layers.push_back(idx.get<int>());
      }
      s.groups.push_back(std::move(layers));
    }
  }
  s.validate();
  return s;
}

json to_json(const AugmentationPlan& plan) {
  json augs = json::array();
  for (auto a : plan.support_augs) augs.push_back(std::string(to_string(a)));
  json views = json::array();
  for (const auto& v : plan.views) {
    json entry{{"kind", std::string(kind_name(v.kind))}};
    if (v.has_tau()) entry["tau"] = v.tau;
    views.push_back(entry);
  }
  return {{"support_augs", augs}, {"views", views}};
}

AugmentationPlan parse_plan(const json& support_augs, const json& views) {
  AugmentationPlan plan;
  require(support_augs.is_array(), ErrorKind::InvalidArgument,
          "support_augs must be a list of strings");
  for (const auto& a : support_augs) {
    require(a.is_string(), ErrorKind::InvalidArgument, "support_augs must be a list of strings");
    plan.support_augs.push_back(parse_support_aug(a.get<std::string>()));
  }
  require(views.is_array(), ErrorKind::InvalidArgument, "views must be a list of objects");
  for (const auto& v : views) {
    check_object(v, "views[]", {"kind", "tau"});
    ViewTransform t;
    t.kind = parse_view_kind(get_as<std::string>(v, "kind", "views[]"));
    if (v.contains("tau")) {
      require(t.has_tau(), ErrorKind::InvalidArgument,
              "views[]: tau only applies to pos_clamp and neg_clamp");
      require(v.at("tau").is_number(), ErrorKind::InvalidArgument, "views[].tau must be a number");
      t.tau = v.at("tau").get<float>();
    }
    plan.views.push_back(t);
  }
  plan.normalize();
  return plan;
}

json to_json(const BackendConfig& backend) {
  json j{{"kind", backend.kind}};
  if (!backend.model.empty()) j["model"] = backend.model.string();
  if (backend.features_root) j["features_root"] = backend.features_root->string();
  if (backend.dataset_root) j["dataset_root"] = backend.dataset_root->string();
  return j;
}

BackendConfig parse_backend(const json& j) {
  const std::string ctx = "backend";
  check_object(j, ctx, {"kind", "model", "features_root", "dataset_root"});
  BackendConfig b;
  if (j.contains("kind")) b.kind = get_as<std::string>(j, "kind", ctx);
  if (j.contains("model")) b.model = get_as<std::string>(j, "model", ctx);
  if (j.contains("features_root")) b.features_root = get_as<std::string>(j, "features_root", ctx);
  if (j.contains("dataset_root")) b.dataset_root = get_as<std::string>(j, "dataset_root", ctx);
  return b;
}

EngineConfig parse_engine_config(const json& j) {
  const std::string ctx = "config";
  check_object(j, ctx,
               {"backend", "backbone_id", "preprocess", "fusion", "support_augs", "views",
                "ablation", "eval_resolution"});
  EngineConfig c;
  if (j.contains("backend")) c.backend = parse_backend(j.at("backend"));
  if (j.contains("backbone_id")) c.backbone_id = get_as<std::string>(j, "backbone_id", ctx);
  if (j.contains("preprocess")) c.preprocess = parse_preprocess(j.at("preprocess"));
  if (j.contains("fusion")) c.fusion = parse_fusion(j.at("fusion"));
  if (j.contains("support_augs") || j.contains("views")) {
    const json augs = j.contains("support_augs") ? j.at("support_augs") : to_json(c.plan)["support_augs"];
    const json views = j.contains("views") ? j.at("views") : to_json(c.plan)["views"];
    c.plan = parse_plan(augs, views);
  }
  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    check_object(a, "ablation", {"support_aug", "pmvt", "cimb"});
    if (a.contains("support_aug")) c.ablation.support_aug = get_as<bool>(a, "support_aug", "ablation");
    if (a.contains("pmvt")) c.ablation.pmvt = get_as<bool>(a, "pmvt", "ablation");
    if (a.contains("cimb")) c.ablation.cimb = get_as<bool>(a, "cimb", "ablation");
  }
  if (j.contains("eval_resolution")) c.eval_resolution = get_size(j, "eval_resolution", ctx);
  c.validate();
  return c;
}

EngineConfig load_engine_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::NotFound, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidArgument, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_engine_config(j);
}

json to_json(const EngineConfig& c) {
  json plan = to_json(c.plan);
  json j{{"backend", to_json(c.backend)},
         {"preprocess", to_json(c.preprocess)},
         {"fusion", to_json(c.fusion)},
         {"support_augs", plan["support_augs"]},
         {"views", plan["views"]},
         {"ablation",
          {{"support_aug", c.ablation.support_aug},
           {"pmvt", c.ablation.pmvt},
           {"cimb", c.ablation.cimb}}},
         {"eval_resolution", c.eval_resolution}};
  if (c.backbone_id) j["backbone_id"] = *c.backbone_id;
  return j;
}

}  // namespace vmad
