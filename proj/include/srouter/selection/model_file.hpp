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

// JSON model files consumed by the learned selectors.
//
//   routerdc / hybrid: {"embeddings": {"<model>": [f, ...], ...}}
//   knn:    {"domains": [..], "records": [{"embedding": [..], "domain": "..",
//            "model": "..", "quality": q}, ...]}
//   kmeans: {"domains": [..], "centroids": [[..], ..],
//            "clusters": [{"<model>": {"quality": q, "latency": l}}, ..]}
//   mlp:    {"domains": [..], "models": [..],
//            "layers": [{"weights": [[..], ..], "bias": [..]}, ..]}
//
// Feature vectors are [embedding; onehot(domain)] over the file's domain
// list. An unknown or absent domain gives an all-zero one-hot block.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srouter/core/error.hpp"
#include "srouter/core/vec.hpp"

namespace srouter::model_file {

using Json = nlohmann::json;
using vec::Vector;

inline Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SelectionError("cannot open model file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw SelectionError("model file '" + path.string() + "': " + e.what());
  }
}

inline Vector vector_of(const Json& j, const std::string& what) {
  if (!j.is_array()) throw SelectionError(what + ": expected a number array");
  Vector v;
  for (const auto& x : j) {
    if (!x.is_number()) throw SelectionError(what + ": expected a number array");
    v.push_back(x.get<double>());
  }
  return v;
}

inline std::vector<std::string> domains_of(const Json& j) {
  std::vector<std::string> out;
  if (auto it = j.find("domains"); it != j.end()) out = it->get<std::vector<std::string>>();
  return out;
}

inline Vector features(const Vector& embedding, const std::optional<std::string>& domain,
                       const std::vector<std::string>& domains) {
  Vector f = embedding;
  for (const auto& d : domains) f.push_back(domain && *domain == d ? 1.0 : 0.0);
  return f;
}

struct EmbeddingTable {
  std::map<std::string, Vector> embeddings;  // unit vectors

  static EmbeddingTable from_json(const Json& j) {
    EmbeddingTable t;
    const auto it = j.find("embeddings");
    if (it == j.end() || !it->is_object()) throw SelectionError("model file: missing 'embeddings' object");
    std::size_t dim = 0;
    for (const auto& [name, v] : it->items()) {
      Vector e = vector_of(v, "embedding for '" + name + "'");
      if (e.empty()) throw SelectionError("empty embedding for '" + name + "'");
      if (dim != 0 && e.size() != dim) throw SelectionError("embedding dimension mismatch for '" + name + "'");
      dim = e.size();
      t.embeddings[name] = vec::normalized(std::move(e));
    }
    return t;
  }

  const Vector& at(const std::string& model) const {
    auto it = embeddings.find(model);
    if (it == embeddings.end()) throw SelectionError("no embedding for model '" + model + "'");
    return it->second;
  }
};

struct KnnRecord {
  Vector features;
  std::string model;
  double quality = 1.0;
};

struct KnnTable {
  std::vector<std::string> domains;
  std::vector<KnnRecord> records;

  static KnnTable from_json(const Json& j) {
    KnnTable t;
    t.domains = domains_of(j);
    for (const auto& r : j.at("records")) {
      std::optional<std::string> domain;
      if (auto d = r.find("domain"); d != r.end() && d->is_string()) domain = d->get<std::string>();
      KnnRecord rec;
      rec.features = features(vector_of(r.at("embedding"), "knn record"), domain, t.domains);
      rec.model = r.at("model").get<std::string>();
      rec.quality = r.value("quality", 1.0);
      if (!t.records.empty() && rec.features.size() != t.records.front().features.size()) {
        throw SelectionError("knn records have inconsistent dimensions");
      }
      t.records.push_back(std::move(rec));
    }
    return t;
  }
};

struct ClusterStat {
  double quality = 0.0;
  double latency = 0.0;
};

struct KmeansTable {
  std::vector<std::string> domains;
  std::vector<Vector> centroids;
  std::vector<std::map<std::string, ClusterStat>> stats;  // per centroid

  static KmeansTable from_json(const Json& j) {
    KmeansTable t;
    t.domains = domains_of(j);
    for (const auto& c : j.at("centroids")) t.centroids.push_back(vector_of(c, "kmeans centroid"));
    if (t.centroids.empty()) throw SelectionError("kmeans model has no centroids");
    for (const auto& c : t.centroids) {
      if (c.size() != t.centroids.front().size()) throw SelectionError("kmeans centroids have inconsistent dimensions");
    }
    const auto& clusters = j.at("clusters");
    if (clusters.size() != t.centroids.size()) throw SelectionError("kmeans: one stats entry per centroid required");
    for (const auto& c : clusters) {
      std::map<std::string, ClusterStat> m;
      for (const auto& [name, s] : c.items()) m[name] = {s.at("quality").get<double>(), s.at("latency").get<double>()};
      t.stats.push_back(std::move(m));
    }
    return t;
  }
};

struct DenseLayer {
  std::vector<Vector> weights;  // rows = outputs
  Vector bias;

  std::size_t inputs() const { return weights.empty() ? 0 : weights.front().size(); }
  std::size_t outputs() const { return weights.size(); }

  Vector apply(const Vector& x) const {
    Vector y(outputs());
    for (std::size_t o = 0; o < outputs(); ++o) y[o] = vec::dot(weights[o], x) + bias[o];
    return y;
  }
};

struct MlpTable {
  std::vector<std::string> domains;
  std::vector<std::string> models;  // output order
  std::vector<DenseLayer> layers;

  static MlpTable from_json(const Json& j) {
    MlpTable t;
    t.domains = domains_of(j);
    t.models = j.at("models").get<std::vector<std::string>>();
    for (const auto& l : j.at("layers")) {
      DenseLayer layer;
      for (const auto& row : l.at("weights")) layer.weights.push_back(vector_of(row, "mlp weights"));
      layer.bias = vector_of(l.at("bias"), "mlp bias");
      if (layer.weights.empty()) throw SelectionError("mlp layer with no outputs");
      for (const auto& row : layer.weights) {
        if (row.size() != layer.inputs()) throw SelectionError("mlp weight rows have inconsistent width");
      }
      if (layer.bias.size() != layer.outputs()) throw SelectionError("mlp bias size does not match layer outputs");
      if (!t.layers.empty() && t.layers.back().outputs() != layer.inputs()) {
        throw SelectionError("mlp layer dimensions do not chain");
      }
      t.layers.push_back(std::move(layer));
    }
    if (t.layers.empty()) throw SelectionError("mlp model has no layers");
    if (t.layers.back().outputs() != t.models.size()) {
      throw SelectionError("mlp output layer size does not match the model list");
    }
    return t;
  }

  std::size_t input_dim() const { return layers.front().inputs(); }

  /// Logits: ReLU after every layer but the last.
  Vector forward(const Vector& f) const {
    if (f.size() != input_dim()) {
      throw SelectionError("mlp input has dimension " + std::to_string(f.size()) + ", expected " +
                           std::to_string(input_dim()));
    }
    Vector x = f;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i].apply(x);
      if (i + 1 < layers.size()) {
        for (double& v : x) v = v > 0.0 ? v : 0.0;
      }
    }
    return x;
  }
};

}  // namespace srouter::model_file
