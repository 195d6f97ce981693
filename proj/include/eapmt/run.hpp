// Copyright 2026 The EAPMT Authors
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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eapmt/llm_client.hpp"

namespace eapmt::run {

struct MetricEndpoint {
  std::string name;
  std::string endpoint;
};

struct RunConfig {
  std::filesystem::path corpus;
  std::vector<ModelSpec> models;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  ClientMode mode = ClientMode::kLive;
  std::optional<std::filesystem::path> cache_dir;
  std::size_t parallelism = 4;
  std::string api_base = "https://api.openai.com/v1";
  std::string api_key;
  std::vector<MetricEndpoint> metrics;

  // Throws Error(kInvalidArgument); replay mode needs an existing cache directory.
  void validate() const;
};

// {"corpus", "models": [{"name", "endpoint", "temperature", "top_p", "max_tokens",
// "timeout_s"}], "seed", "out", "mode", "cache", "parallel", "api_base", "api_key",
// "metrics": [{"name", "endpoint"}]}
RunConfig config_from_json(std::string_view text);
// Everything needed to re-run, minus the API key and output directory.
std::string config_to_json(const RunConfig& cfg);

std::unique_ptr<LlmClient> make_client(const RunConfig& cfg);

// Commands: translate, eapmt, probe, questionnaire-make, questionnaire-ingest,
// judge, report. The request is a JSON object; see the README for fields.
// Writes outputs and manifest.json under cfg.out and returns
// {"out", "files", "errors", "text"}. `client` overrides make_client(cfg).
std::string execute(std::string_view command, const RunConfig& cfg, std::string_view request_json,
                    LlmClient* client = nullptr);

const std::vector<std::string>& command_names();

}  // namespace eapmt::run
