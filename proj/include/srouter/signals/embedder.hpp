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

#include <cstddef>
#include <string_view>

#include "srouter/core/text.hpp"
#include "srouter/core/vec.hpp"

namespace srouter {

/// Maps text to a unit-norm vector of fixed dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual vec::Vector embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
};

/// Hashed character-trigram frequencies, L2-normalized. Text is lower-cased
/// first. Inputs shorter than three code points hash as a single gram; the
/// empty string maps to a fixed unit basis vector.
class HashedTrigramEmbedder final : public Embedder {
 public:
  explicit HashedTrigramEmbedder(std::size_t dim = 256) : dim_(dim) {}

  vec::Vector embed(std::string_view text) const override {
    vec::Vector v(dim_, 0.0);
    std::u32string cps = text::decode(text);
    for (char32_t& c : cps) c = text::lower_cp(c);
    if (cps.empty()) {
      v[0] = 1.0;
      return v;
    }
    const auto bump = [&](std::u32string_view gram) {
      v[text::fnv1a(text::encode(gram)) % dim_] += 1.0;
    };
    if (cps.size() < 3) {
      bump(cps);
    } else {
      for (std::size_t i = 0; i + 3 <= cps.size(); ++i) bump(std::u32string_view(cps).substr(i, 3));
    }
    return vec::normalized(std::move(v));
  }

  std::size_t dimension() const override { return dim_; }

 private:
  std::size_t dim_;
};

}  // namespace srouter
