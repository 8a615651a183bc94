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

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace srouter::gateway {

/// Counter and histogram registry with a plain-text dump. Thread-safe.
/// Series names carry their labels, e.g. `srouter_requests_total{decision="math"}`.
class Metrics {
 public:
  static constexpr std::array<double, 12> kBucketsMs{1, 2, 5, 10, 25, 50, 100, 250, 500, 1000, 2500, 10000};

  void add(const std::string& series, double v = 1.0) {
    std::lock_guard lock(mu_);
    counters_[series] += v;
  }

  void observe(const std::string& series, double v) {
    std::lock_guard lock(mu_);
    auto& h = histograms_[series];
    for (std::size_t i = 0; i < kBucketsMs.size(); ++i) {
      if (v <= kBucketsMs[i]) ++h.buckets[i];
    }
    ++h.count;
    h.sum += v;
  }

  double counter(const std::string& series) const {
    std::lock_guard lock(mu_);
    auto it = counters_.find(series);
    return it == counters_.end() ? 0.0 : it->second;
  }

  std::size_t observations(const std::string& series) const {
    std::lock_guard lock(mu_);
    auto it = histograms_.find(series);
    return it == histograms_.end() ? 0 : it->second.count;
  }

  double sum(const std::string& series) const {
    std::lock_guard lock(mu_);
    auto it = histograms_.find(series);
    return it == histograms_.end() ? 0.0 : it->second.sum;
  }

  std::string render() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& [k, v] : counters_) out += k + " " + num(v) + "\n";
    for (const auto& [k, h] : histograms_) {
      const auto brace = k.find('{');
      const std::string name = k.substr(0, brace);
      const std::string labels = brace == std::string::npos ? "" : k.substr(brace + 1, k.size() - brace - 2);
      const auto with = [&](const std::string& extra) {
        std::string l = labels;
        if (!extra.empty()) l += (l.empty() ? "" : ",") + extra;
        return l.empty() ? std::string() : "{" + l + "}";
      };
      for (std::size_t i = 0; i < kBucketsMs.size(); ++i) {
        out += name + "_bucket" + with("le=\"" + num(kBucketsMs[i]) + "\"") + " " + std::to_string(h.buckets[i]) + "\n";
      }
      out += name + "_bucket" + with("le=\"+Inf\"") + " " + std::to_string(h.count) + "\n";
      out += name + "_sum" + with("") + " " + num(h.sum) + "\n";
      out += name + "_count" + with("") + " " + std::to_string(h.count) + "\n";
    }
    return out;
  }

  static std::string series(std::string name, const std::vector<std::pair<std::string, std::string>>& labels) {
    if (labels.empty()) return name;
    name += "{";
    for (std::size_t i = 0; i < labels.size(); ++i) {
      name += (i ? "," : "") + labels[i].first + "=\"" + escape(labels[i].second) + "\"";
    }
    return name + "}";
  }

 private:
  struct Histogram {
    std::array<std::size_t, kBucketsMs.size()> buckets{};
    std::size_t count = 0;
    double sum = 0.0;
  };

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }

  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out.push_back('\\');
      if (c == '\n') {
        out += "\\n";
        continue;
      }
      out.push_back(c);
    }
    return out;
  }

  mutable std::mutex mu_;
  std::map<std::string, double> counters_;
  std::map<std::string, Histogram> histograms_;
};

}  // namespace srouter::gateway
