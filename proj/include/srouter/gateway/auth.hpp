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

#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "srouter/config/types.hpp"
#include "srouter/core/error.hpp"
#include "srouter/signals/request.hpp"

namespace srouter::gateway {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

/// `${VAR}` reads the environment; anything else is a literal secret.
inline std::string resolve_secret(const std::string& ref, const EnvLookup& env = process_env) {
  if (ref.size() >= 3 && ref.rfind("${", 0) == 0 && ref.back() == '}') {
    const std::string var = ref.substr(2, ref.size() - 3);
    auto v = env(var);
    if (!v) throw ConfigError(ConfigError::Kind::kReference, "secret '" + ref + "': environment variable " + var + " is not set");
    return *v;
  }
  return ref;
}

/// Endpoint name -> resolved api_key secret. Built once at startup so a
/// missing variable fails there.
inline std::map<std::string, std::string> resolve_secrets(const EndpointTopology& topology,
                                                          const EnvLookup& env = process_env) {
  std::map<std::string, std::string> out;
  for (const auto& e : topology.entries) {
    if (e.auth.kind != AuthKind::kApiKey) continue;
    if (e.auth.secret_ref.empty()) {
      throw ConfigError(ConfigError::Kind::kConstraint, "backend '" + e.name + "': api_key auth needs a secret_ref");
    }
    out[e.name] = resolve_secret(e.auth.secret_ref, env);
  }
  return out;
}

inline constexpr std::string_view kAuthorization = "authorization";

/// Client credential headers never forwarded unless passthrough.
inline bool is_credential_header(std::string_view lower_name, const AuthProfile& p) {
  return lower_name == kAuthorization || lower_name == "x-api-key" || lower_name == "proxy-authorization" ||
         (!p.header.empty() && lower_name == text::to_lower(p.header));
}

/// Rewrites the credential headers of an outbound request.
///  - api_key: inbound credentials dropped; the configured header set
///    (`Authorization: Bearer <secret>` by default, the raw secret otherwise).
///  - passthrough: the inbound credentials copied unchanged.
///  - none: inbound credentials dropped.
inline void inject_auth(Headers& outbound, const Headers& inbound, const AuthProfile& profile,
                        const std::string& secret = {}) {
  std::vector<std::string> drop;
  for (const auto& [k, v] : outbound.all()) {
    if (is_credential_header(k, profile)) drop.push_back(k);
  }
  for (const auto& k : drop) outbound.erase(k);
  switch (profile.kind) {
    case AuthKind::kApiKey: {
      const std::string header = profile.header.empty() ? std::string(kAuthorization) : profile.header;
      outbound.set(header, text::to_lower(header) == kAuthorization ? "Bearer " + secret : secret);
      break;
    }
    case AuthKind::kPassthrough:
      for (const auto& [k, v] : inbound.all()) {
        if (is_credential_header(k, profile)) outbound.set(k, v);
      }
      break;
    case AuthKind::kNone:
      break;
  }
}

}  // namespace srouter::gateway
