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

// Standalone OpenAI-compatible mock backend.

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "srouter/gateway/mock_upstream.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mock_upstream: scriptable chat-completions backend"};
  srouter::gateway::MockUpstream::Options opt;
  std::string host = "127.0.0.1";
  int port = 0, delay_ms = 0, latency_ms = 0;
  bool no_usage = false;
  app.add_option("--host", host)->capture_default_str();
  app.add_option("--port", port, "0 picks a free port")->capture_default_str();
  app.add_option("--status", opt.status, "HTTP status for every reply")->capture_default_str();
  app.add_option("--reply", opt.reply, "fixed reply text (default: echo the last user message)");
  app.add_option("--prompt-tokens", opt.prompt_tokens)->capture_default_str();
  app.add_option("--completion-tokens", opt.completion_tokens)->capture_default_str();
  app.add_option("--stream-chunks", opt.stream_chunks, "0 streams one chunk per word")->capture_default_str();
  app.add_option("--chunk-delay-ms", delay_ms)->capture_default_str();
  app.add_option("--latency-ms", latency_ms, "delay before answering")->capture_default_str();
  app.add_option("--name", opt.name)->capture_default_str();
  app.add_flag("--no-usage", no_usage, "omit the usage block");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  opt.chunk_delay = std::chrono::milliseconds(delay_ms);
  opt.latency = std::chrono::milliseconds(latency_ms);
  opt.usage = !no_usage;

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  try {
    srouter::gateway::MockUpstream mock(opt, host, port);
    std::cout << "listening on " << host << ":" << mock.port() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
  } catch (const std::exception& e) {
    std::cerr << "mock_upstream: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
