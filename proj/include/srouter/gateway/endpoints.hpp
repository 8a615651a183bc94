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
#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "srouter/config/types.hpp"

namespace srouter::gateway {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Index into `ws` whose cumulative-weight interval contains u in [0,1).
inline std::size_t weighted_pick(const std::vector<WeightedEndpoint>& ws, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    acc += ws[i].weight;
    if (u < acc) return i;
  }
  return ws.size() - 1;
}

/// splitmix64 finalizer; FNV alone leaves the high bits of similar keys close.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Maps a session key to a stable point in [0,1).
inline double session_point(std::string_view key) {
  return static_cast<double>(mix64(fnv1a(key)) >> 11) * 0x1.0p-53;
}

/// Attempt order for one request: the drawn endpoint first, then the rest
/// by descending weight (ties by declaration order). Each endpoint appears
/// once.
inline std::vector<std::size_t> failover_order(const std::vector<WeightedEndpoint>& ws, double u) {
  std::vector<std::size_t> order;
  if (ws.empty()) return order;
  const std::size_t first = weighted_pick(ws, u);
  order.push_back(ws[first].index);
  std::vector<WeightedEndpoint> rest;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (i != first) rest.push_back(ws[i]);
  }
  std::stable_sort(rest.begin(), rest.end(),
                   [](const WeightedEndpoint& a, const WeightedEndpoint& b) { return a.weight > b.weight; });
  for (const auto& w : rest) order.push_back(w.index);
  return order;
}

/// Weighted random choice with sticky sessions. Thread-safe.
class EndpointResolver {
 public:
  explicit EndpointResolver(std::uint64_t seed = std::random_device{}()) : rng_(seed) {}

  std::vector<std::size_t> resolve(const EndpointTopology& topology, std::string_view model,
                                   const std::optional<std::string>& session = std::nullopt) {
    const auto ws = topology.for_model(model);
    if (ws.empty()) return {};
    double u = 0.0;
    if (session && !session->empty()) {
      u = session_point(*session);
    } else {
      std::lock_guard lock(mu_);
      u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    }
    return failover_order(ws, u);
  }

 private:
  std::mutex mu_;
  std::mt19937_64 rng_;
};

}  // namespace srouter::gateway
