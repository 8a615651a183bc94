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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "srouter/core/error.hpp"
#include "srouter/core/text.hpp"

namespace srouter {

/// E[C] = sum_k C_k * prod_{j<k} (1 - P_j). The last stage always accepts,
/// so pass.size() may be costs.size() - 1.
inline double expected_cost(const std::vector<double>& pass, const std::vector<double>& costs) {
  if (costs.empty()) throw SelectionError("automix: empty cascade");
  if (pass.size() + 1 < costs.size()) throw SelectionError("automix: one pass probability per non-final stage");
  double total = 0.0;
  double reach = 1.0;
  for (std::size_t k = 0; k < costs.size(); ++k) {
    total += costs[k] * reach;
    if (k < pass.size()) reach *= 1.0 - pass[k];
  }
  return total;
}

/// Decides whether stage `k`'s response is accepted.
using CascadeVerifier = std::function<bool(std::size_t stage, const std::string& response)>;
using CascadeGenerator = std::function<std::string(std::size_t stage, const std::string& model)>;

/// Default desk-scale verifier: accept iff the response has at least
/// thresholds[k] code points. Stages without a threshold accept.
inline CascadeVerifier length_verifier(std::vector<std::int64_t> thresholds) {
  return [thresholds = std::move(thresholds)](std::size_t stage, const std::string& response) {
    if (stage >= thresholds.size()) return true;
    return static_cast<std::int64_t>(text::code_point_count(response)) >= thresholds[stage];
  };
}

struct CascadeResult {
  std::size_t stage = 0;
  std::string model;
  std::string response;
  std::vector<std::string> attempted;
};

/// Runs models cheapest first, escalating on verifier failure. The final
/// stage is accepted unconditionally.
inline CascadeResult run_cascade(const std::vector<std::string>& models, const CascadeGenerator& generate,
                                 const CascadeVerifier& verify) {
  if (models.empty()) throw SelectionError("automix: empty cascade");
  CascadeResult r;
  for (std::size_t k = 0; k < models.size(); ++k) {
    r.attempted.push_back(models[k]);
    std::string out = generate(k, models[k]);
    if (k + 1 == models.size() || verify(k, out)) {
      r.stage = k;
      r.model = models[k];
      r.response = std::move(out);
      break;
    }
  }
  return r;
}

}  // namespace srouter
