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

#include <filesystem>
#include <string>
#include <vector>

#include "detail.hpp"
#include "eapmt/error.hpp"
#include "eapmt/llm_client.hpp"
#include "eapmt/run.hpp"
#include "json.hpp"

namespace eapmt::testing {

struct StepResult {
  std::string name;
  nlohmann::ordered_json result;
};

// Runs every step of <fixtures>/experiment.json with run directories under
// `root`, which is also the working directory while steps run. Inputs written
// "@step" refer to earlier steps.
inline std::vector<StepResult> run_experiment(const std::filesystem::path& fixtures,
                                              const std::filesystem::path& root, ClientMode mode,
                                              LlmClient* client = nullptr) {
  namespace fs = std::filesystem;
  using json = nlohmann::ordered_json;
  const fs::path dir = fs::absolute(fixtures);
  json plan = json::parse(detail::read_file(dir / "experiment.json"));

  json base;
  base["corpus"] = (dir / plan["corpus"].get<std::string>()).string();
  base["cache"] = (dir / plan["cache"].get<std::string>()).string();
  base["seed"] = plan["seed"];
  base["mode"] = std::string(client_mode_name(mode));
  base["parallel"] = 4;

  fs::create_directories(root);
  const fs::path previous = fs::current_path();
  fs::current_path(root);
  std::vector<StepResult> results;
  try {
    for (const auto& step : plan["steps"]) {
      json cfg = base;
      cfg["out"] = step["name"];
      json models = json::array();
      for (const auto& m : plan["models"]) {
        if (!step.contains("models")) {
          models.push_back(m);
          continue;
        }
        for (const auto& want : step["models"]) {
          if (want == m["name"]) models.push_back(m);
        }
      }
      cfg["models"] = models;
      json request = step["request"];
      if (request.contains("inputs")) {
        for (auto& in : request["inputs"]) {
          std::string s = in.get<std::string>();
          if (!s.empty() && s[0] == '@') in = s.substr(1);
        }
      }
      run::RunConfig rc = run::config_from_json(cfg.dump());
      std::string out =
          run::execute(step["command"].get<std::string>(), rc, request.dump(), client);
      results.push_back({step["name"].get<std::string>(), json::parse(out)});
    }
  } catch (...) {
    fs::current_path(previous);
    throw;
  }
  fs::current_path(previous);
  return results;
}

}  // namespace eapmt::testing
