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

// srouter: gateway server and configuration toolchain.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "srouter/decision/synthesis.hpp"
#include "srouter/dsl.hpp"
#include "srouter/gateway.hpp"

namespace fs = std::filesystem;
using namespace srouter;

namespace {

constexpr int kUsage = 2;

std::string slurp(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

bool is_dsl(const std::string& path, const std::string& text) {
  if (fs::path(path).extension() == ".dsl") return true;
  if (fs::path(path).extension() == ".yaml" || fs::path(path).extension() == ".yml") return false;
  // Sniff: DSL programs start with a top-level keyword.
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    if (word.rfind('#', 0) == 0) {
      std::getline(in, word);
      continue;
    }
    return dsl::is_top_keyword(word);
  }
  return false;
}

/// DSL source or a flat/CRD/Helm YAML document.
RouterConfig load_router_config(const std::string& path, bool force = false) {
  const std::string text = slurp(path);
  if (is_dsl(path, text)) return dsl::compile_source(text, {force});
  return dsl::load_any(text);
}

void print_diagnostics(const std::string& path, const std::vector<dsl::Diagnostic>& ds) {
  for (const auto& d : ds) std::cerr << path << ":" << d.format() << "\n";
}

int report(const std::string& path, const std::exception& e) {
  if (const auto* d = dynamic_cast<const dsl::DslError*>(&e)) {
    print_diagnostics(path, d->diagnostics());
  } else {
    std::cerr << "srouter: " << e.what() << "\n";
  }
  return 1;
}

std::pair<std::string, int> split_listen(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected host:port, got '" + addr + "'");
  try {
    return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--listen", "bad port in '" + addr + "'");
  }
}

int cmd_validate(const std::string& path) {
  const std::string text = slurp(path);
  if (!is_dsl(path, text)) {
    try {
      dsl::load_any(text);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << path << ": " << e.what() << "\n";
      return 2;
    }
  }
  const auto diags = dsl::validate(dsl::parse(text));
  print_diagnostics(path, diags);
  return dsl::exit_code(diags);
}

int cmd_compile(const std::string& path, const std::string& target, const std::string& out, bool force) {
  const auto t = dsl::parse_target(target);
  if (!t) throw CLI::ValidationError("--target", "expected flat, crd or helm");
  try {
    spill(out, dsl::emit(load_router_config(path, force), *t));
    return 0;
  } catch (const std::exception& e) {
    return report(path, e);
  }
}

int cmd_decompile(const std::string& path, const std::string& out) {
  try {
    spill(out, dsl::decompile(load_router_config(path)));
    return 0;
  } catch (const std::exception& e) {
    return report(path, e);
  }
}

int cmd_route(const std::string& config, const std::string& input) {
  try {
    gateway::GatewayOptions opt;
    opt.base_dir = fs::path(config).parent_path();
    // Dry runs never reach the network; secrets only have to resolve for serve.
    opt.env = [](const std::string&) -> std::optional<std::string> { return std::string("dry-run"); };
    gateway::Gateway gw(load_router_config(config), std::make_shared<gateway::HttpUpstreamClient>(), {}, opt);
    const gateway::DryRun plan = gw.dry_run(slurp(input));
    std::cout << plan.to_json().dump(2) << "\n";
    return plan.error.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    return report(config, e);
  }
}

int cmd_analyze(const std::string& config) {
  try {
    const PolicyReport rep = analyze_policy(load_router_config(config));
    std::cout << doc::emit_yaml(to_json(rep));
    return 0;
  } catch (const std::exception& e) {
    return report(config, e);
  }
}

int cmd_serve(const std::string& config, const std::string& listen, std::size_t threads) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGHUP);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);  // inherited by every server thread

  const auto [host, port] = split_listen(listen);
  gateway::GatewayOptions opt;
  opt.base_dir = fs::path(config).parent_path();
  std::unique_ptr<gateway::Gateway> gw;
  try {
    gw = std::make_unique<gateway::Gateway>(load_router_config(config), nullptr, gateway::GatewayServices{}, opt);
  } catch (const std::exception& e) {
    return report(config, e);
  }
  gateway::GatewayServer server(*gw, threads);
  const int bound = server.start(host, port);
  std::cout << "listening on " << host << ":" << bound << std::endl;
  for (;;) {
    int sig = 0;
    sigwait(&set, &sig);
    if (sig != SIGHUP) break;
    try {
      gw->reload(load_router_config(config));
      std::cerr << "reloaded " << config << "\n";
    } catch (const std::exception& e) {
      report(config, e);
      std::cerr << "keeping the previous configuration\n";
    }
  }
  server.stop();
  return 0;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srouter: signal-driven LLM routing gateway"};
  app.require_subcommand(1);

  std::string file, out, target = "flat", config, input, listen;
  bool force = false, dry_run = false;
  std::size_t threads = 32;

  auto* validate = app.add_subcommand("validate", "check a DSL program (exit 0 clean, 1 warnings, 2 errors)");
  validate->add_option("file", file, "DSL source or YAML config ('-' for stdin)")->required();

  auto* compile = app.add_subcommand("compile", "compile DSL to a YAML config");
  compile->add_option("file", file, "DSL source")->required();
  compile->add_option("--target", target, "flat, crd or helm")->capture_default_str();
  compile->add_option("-o,--output", out, "output file (default stdout)");
  compile->add_flag("--force", force, "compile despite warnings");

  auto* decompile = app.add_subcommand("decompile", "turn a YAML config (or DSL) back into DSL");
  decompile->add_option("file", file, "flat, CRD or Helm YAML")->required();
  decompile->add_option("-o,--output", out, "output file (default stdout)");

  auto* route = app.add_subcommand("route", "show how a request would be routed");
  route->add_flag("--dry-run", dry_run, "plan only; never forwards (required)")->required();
  route->add_option("--config", config, "config file")->required();
  route->add_option("--input", input, "chat-completions request body ('-' for stdin)")->required();

  auto* analyze = app.add_subcommand("analyze", "coverage, conflict and subsumption report");
  analyze->add_option("--config", config, "config file")->required();

  auto* serve = app.add_subcommand("serve", "run the gateway");
  serve->add_option("--config", config, "config file (env SR_CONFIG)");
  serve->add_option("--listen", listen, "host:port (env SR_LISTEN, default 0.0.0.0:8801)");
  serve->add_option("--threads", threads, "worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
    if (*validate) return cmd_validate(file);
    if (*compile) return cmd_compile(file, target, out, force);
    if (*decompile) return cmd_decompile(file, out);
    if (*route) return cmd_route(config, input);
    if (*analyze) return cmd_analyze(config);
    if (*serve) {
      config = env_or("SR_CONFIG", config);
      listen = env_or("SR_LISTEN", listen.empty() ? "0.0.0.0:8801" : listen);
      if (config.empty()) throw CLI::RequiredError("--config (or SR_CONFIG)");
      return cmd_serve(config, listen, threads);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "srouter: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}
