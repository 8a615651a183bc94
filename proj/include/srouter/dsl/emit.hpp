// Copyright 2026 The srouter Authors
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

#include <string>
#include <string_view>

#include "srouter/config/document.hpp"
#include "srouter/config/loader.hpp"
#include "srouter/config/schema.hpp"

namespace srouter::dsl {

enum class Target { kFlat, kCrd, kHelm };

inline std::optional<Target> parse_target(std::string_view s) {
  if (s == "flat" || s == "yaml") return Target::kFlat;
  if (s == "crd") return Target::kCrd;
  if (s == "helm") return Target::kHelm;
  return std::nullopt;
}

inline constexpr std::string_view kCrdApiVersion = "vllm.ai/v1alpha1";
inline constexpr std::string_view kCrdKind = "SemanticRouter";

namespace detail {

/// Drops empty top-level sections. Deeper empty mappings are meaningful
/// (an empty plugin block enables the plugin with defaults).
inline Json prune_empty_sections(const Json& j) {
  Json out = Json::object();
  for (const auto& [k, v] : j.items()) {
    if ((v.is_object() || v.is_array()) && v.empty()) continue;
    out[k] = v;
  }
  return out;
}

}  // namespace detail

/// Document tree for one target. Keys are sorted by the YAML emitter; list
/// order is declaration order.
inline Json emit_tree(const RouterConfig& config, Target target, std::string_view name = "semantic-router") {
  Json flat = schema::to_json(config);
  switch (target) {
    case Target::kFlat:
      return flat;
    case Target::kCrd: {
      Json endpoints = flat["backends"];
      flat.erase("backends");
      Json doc = Json::object();
      doc["apiVersion"] = kCrdApiVersion;
      doc["kind"] = kCrdKind;
      doc["metadata"] = {{"name", std::string(name)}};
      doc["spec"] = {{"vllmEndpoints", std::move(endpoints)}, {"config", std::move(flat)}};
      return doc;
    }
    case Target::kHelm:
      return Json{{"config", detail::prune_empty_sections(flat)}};
  }
  return flat;
}

inline std::string emit(const RouterConfig& config, Target target) {
  return doc::emit_yaml(emit_tree(config, target));
}

/// Reads any of the three targets back into the flat document form.
inline Json flat_document(const Json& doc) {
  if (doc.is_object() && doc.contains("apiVersion")) {
    if (doc.value("kind", "") != kCrdKind) throw ConfigError(ConfigError::Kind::kParse, "not a SemanticRouter resource");
    const Json& spec = doc.at("spec");
    Json flat = spec.value("config", Json::object());
    flat["backends"] = spec.value("vllmEndpoints", Json::array());
    return flat;
  }
  if (doc.is_object() && doc.size() == 1 && doc.contains("config")) return doc["config"];
  return doc;
}

/// Loads a flat, CRD or Helm document.
inline RouterConfig load_any(std::string_view text) {
  RouterConfig config = schema::config_from_json(flat_document(doc::parse_yaml(text)));
  finalize(config);
  return config;
}

}  // namespace srouter::dsl
