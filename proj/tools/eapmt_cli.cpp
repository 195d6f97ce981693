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

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eapmt/eapmt.h"
#include "json.hpp"
#include "tomlplusplus/toml.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

constexpr const char* kDefaultConfig = "eapmt.toml";

struct CommonFlags {
  std::string config;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> models;
  std::string out;
  std::optional<std::size_t> parallel;
  std::string corpus;
  std::string cache;
};

class CliFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(eapmt_status status) {
  if (status != EAPMT_OK) {
    throw CliFailure(std::string(eapmt_status_name(status)) + ": " + eapmt_last_error());
  }
}

std::string take(char* s) {
  std::string out(s ? s : "");
  eapmt_string_free(s);
  return out;
}

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "TOML run configuration (default ./eapmt.toml if present)");
  cmd->add_option("--mode", f.mode, "Client mode")->check(CLI::IsMember({"live", "replay", "record"}));
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--model", f.models, "Model name; repeat or comma-separate for several")
      ->delimiter(',');
  cmd->add_option("--out", f.out, "Run directory");
  cmd->add_option("--parallel", f.parallel, "Maximum concurrent requests")
      ->check(CLI::Range(1, 1024));
  cmd->add_option("--corpus", f.corpus, "Corpus JSONL");
  cmd->add_option("--cache", f.cache, "Completion cache directory");
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  return path.is_absolute() ? path.string() : (base / path).lexically_normal().string();
}

json model_from_toml(const toml::table& t) {
  json m;
  m["name"] = t["name"].value_or(std::string());
  if (auto v = t["endpoint"].value<std::string>()) m["endpoint"] = *v;
  if (auto v = t["temperature"].value<double>()) m["temperature"] = *v;
  if (auto v = t["top_p"].value<double>()) m["top_p"] = *v;
  if (auto v = t["max_tokens"].value<int64_t>()) m["max_tokens"] = *v;
  if (auto v = t["timeout_s"].value<int64_t>()) m["timeout_s"] = *v;
  return m;
}

json config_from_file(const std::string& path) {
  json cfg = json::object();
  toml::table t;
  try {
    t = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw CliFailure("cannot read config " + path + ": " + std::string(e.description()));
  }
  const fs::path base = fs::path(path).parent_path();
  if (auto v = t["corpus"].value<std::string>()) cfg["corpus"] = resolve(base, *v);
  if (auto v = t["cache"].value<std::string>()) cfg["cache"] = resolve(base, *v);
  if (auto v = t["out"].value<std::string>()) cfg["out"] = resolve(base, *v);
  if (auto v = t["seed"].value<int64_t>()) {
    if (*v < 0) throw CliFailure("seed must be non-negative");
    cfg["seed"] = static_cast<std::uint64_t>(*v);
  }
  if (auto v = t["mode"].value<std::string>()) cfg["mode"] = *v;
  if (auto v = t["parallel"].value<int64_t>()) cfg["parallel"] = *v;
  if (auto v = t["api_base"].value<std::string>()) cfg["api_base"] = *v;
  if (auto v = t["api_key"].value<std::string>()) cfg["api_key"] = *v;
  if (auto* models = t["models"].as_array()) {
    cfg["models"] = json::array();
    for (auto& m : *models) {
      if (auto* mt = m.as_table()) {
        cfg["models"].push_back(model_from_toml(*mt));
      } else if (auto name = m.value<std::string>()) {
        cfg["models"].push_back(json{{"name", *name}});
      }
    }
  }
  if (auto* metrics = t["metrics"].as_array()) {
    cfg["metrics"] = json::array();
    for (auto& m : *metrics) {
      if (auto* mt = m.as_table()) {
        cfg["metrics"].push_back({{"name", (*mt)["name"].value_or(std::string())},
                                  {"endpoint", (*mt)["endpoint"].value_or(std::string())}});
      }
    }
  }
  return cfg;
}

std::string default_out(const std::string& command) {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return (fs::path("runs") / (command + "-" + buf)).string();
}

// Precedence: flags > environment > config file.
json build_config(const CommonFlags& f, const std::string& command) {
  json cfg = json::object();
  if (!f.config.empty()) {
    cfg = config_from_file(f.config);
  } else if (fs::exists(kDefaultConfig)) {
    cfg = config_from_file(kDefaultConfig);
  }
  if (const char* key = std::getenv("EAPMT_API_KEY")) cfg["api_key"] = key;
  if (const char* base = std::getenv("EAPMT_API_BASE")) cfg["api_base"] = base;

  if (!f.mode.empty()) cfg["mode"] = f.mode;
  if (f.seed) cfg["seed"] = *f.seed;
  if (f.parallel) cfg["parallel"] = *f.parallel;
  if (!f.corpus.empty()) cfg["corpus"] = f.corpus;
  if (!f.cache.empty()) cfg["cache"] = f.cache;
  if (!f.models.empty()) {
    // Keep file parameters for models named on the command line.
    json models = json::array();
    for (const auto& name : f.models) {
      json m = {{"name", name}};
      if (cfg.contains("models")) {
        for (const auto& existing : cfg["models"]) {
          if (existing.value("name", "") == name) m = existing;
        }
      }
      models.push_back(m);
    }
    cfg["models"] = models;
  }
  if (!f.out.empty()) {
    cfg["out"] = f.out;
  } else if (!cfg.contains("out")) {
    cfg["out"] = default_out(command);
  }
  return cfg;
}

int run_command(const std::string& command, const CommonFlags& flags, const json& request) {
  json cfg = build_config(flags, command);
  char* result = nullptr;
  check(eapmt_run(command.c_str(), cfg.dump().c_str(), request.dump().c_str(), nullptr, &result));
  json r = json::parse(take(result));
  std::cout << r.value("text", "");
  std::cerr << "run directory: " << r.value("out", "") << "\n";
  const auto errors = r.value("errors", std::size_t{0});
  if (errors > 0) std::cerr << errors << " item(s) failed; see errors.jsonl\n";
  return kExitOk;
}

json pairs_request(const std::vector<std::string>& poems, std::optional<std::size_t> test_size) {
  json req = json::object();
  if (!poems.empty()) req["pairs"] = poems;
  if (test_size) req["test_size"] = *test_size;
  return req;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poetry translation experiment harness"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  // corpus stats
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus utilities");
  corpus_cmd->require_subcommand(1);
  auto* stats_cmd = corpus_cmd->add_subcommand("stats", "Print poem, line and token counts");
  std::string stats_path;
  stats_cmd->add_option("path", stats_path, "Corpus JSONL")->required();

  // translate
  CommonFlags translate_flags;
  std::vector<std::string> translate_poems;
  std::optional<std::size_t> translate_test_size;
  std::vector<std::string> templates;
  std::vector<int> shots;
  auto* translate_cmd = app.add_subcommand("translate", "Direct translation over a prompt grid");
  add_common(translate_cmd, translate_flags);
  translate_cmd->add_option("--poem", translate_poems, "Pair id; repeatable")->delimiter(',');
  translate_cmd->add_option("--test-size", translate_test_size, "Sample this many poems");
  translate_cmd->add_option("--templates", templates, "Template ids, e.g. H1,H2,H3")
      ->delimiter(',')
      ->required();
  translate_cmd->add_option("--shots", shots, "Shot counts for few-shot templates")->delimiter(',');

  // eapmt
  CommonFlags eapmt_flags;
  std::vector<std::string> eapmt_poems;
  std::optional<std::size_t> eapmt_test_size;
  std::string variant;
  auto* eapmt_cmd = app.add_subcommand("eapmt", "Explain-then-translate pipeline");
  add_common(eapmt_cmd, eapmt_flags);
  eapmt_cmd->add_option("--poem", eapmt_poems, "Pair id; repeatable")->delimiter(',');
  eapmt_cmd->add_option("--test-size", eapmt_test_size, "Sample this many poems");
  eapmt_cmd->add_option("--variant", variant, "Prompt wording")
      ->check(CLI::IsMember({"gpt35", "gpt4"}));

  // probe
  CommonFlags probe_flags;
  std::vector<std::string> probe_poems;
  std::optional<std::size_t> probe_test_size;
  std::vector<double> fractions;
  std::vector<std::string> sides;
  auto* probe_cmd = app.add_subcommand("probe", "Continuation probe for memorized text");
  add_common(probe_cmd, probe_flags);
  probe_cmd->add_option("--poem", probe_poems, "Pair id; repeatable")->delimiter(',');
  probe_cmd->add_option("--test-size", probe_test_size, "Sample this many poems");
  probe_cmd->add_option("--fractions", fractions, "Prefix fractions")->delimiter(',');
  probe_cmd->add_option("--sides", sides, "source, translation")
      ->delimiter(',')
      ->check(CLI::IsMember({"source", "translation"}));

  // questionnaire make / ingest
  auto* q_cmd = app.add_subcommand("questionnaire", "Blinded human evaluation files");
  q_cmd->require_subcommand(1);
  CommonFlags make_flags;
  std::vector<std::string> make_inputs;
  std::vector<std::string> make_systems;
  std::vector<std::string> make_poems;
  std::vector<std::string> make_judges;
  std::size_t judge_count = 6;
  std::string make_kind = "vote";
  auto* make_cmd = q_cmd->add_subcommand("make", "Write questionnaires and a blinding key");
  add_common(make_cmd, make_flags);
  make_cmd->add_option("--input", make_inputs, "Run directory or records file; repeatable")
      ->required();
  make_cmd->add_option("--system", make_systems, "System label to include; repeatable")
      ->delimiter(',');
  make_cmd->add_option("--poem", make_poems, "Pair id; repeatable")->delimiter(',');
  make_cmd->add_option("--judge", make_judges, "Judge id; repeatable")->delimiter(',');
  make_cmd->add_option("--judges", judge_count, "Number of judges when ids are not given")
      ->check(CLI::Range(1, 100));
  make_cmd->add_option("--kind", make_kind, "vote or score")
      ->check(CLI::IsMember({"vote", "score"}));

  CommonFlags ingest_flags;
  std::string key_path;
  std::vector<std::string> answers;
  std::string ingest_kind = "vote";
  std::string condition = "votes";
  auto* ingest_cmd = q_cmd->add_subcommand("ingest", "Aggregate answer sheets");
  add_common(ingest_cmd, ingest_flags);
  ingest_cmd->add_option("--key", key_path, "Blinding key JSON")->required();
  ingest_cmd->add_option("--answers", answers, "Answer sheet CSV; repeatable")->required();
  ingest_cmd->add_option("--kind", ingest_kind, "vote or score")
      ->check(CLI::IsMember({"vote", "score"}));
  ingest_cmd->add_option("--condition", condition, "Row label for the vote table");

  // judge
  CommonFlags judge_flags;
  std::vector<std::string> judge_inputs;
  std::vector<std::string> judge_systems;
  std::vector<std::string> judge_poems;
  auto* judge_cmd = app.add_subcommand("judge", "Score candidates with a model judge");
  add_common(judge_cmd, judge_flags);
  judge_cmd->add_option("--input", judge_inputs, "Run directory or records file; repeatable")
      ->required();
  judge_cmd->add_option("--system", judge_systems, "System label (2 to 5); repeatable")
      ->delimiter(',');
  judge_cmd->add_option("--poem", judge_poems, "Pair id; repeatable")->delimiter(',');

  // report
  CommonFlags report_flags;
  std::vector<std::string> report_inputs;
  auto* report_cmd = app.add_subcommand("report", "Metric and evaluation tables");
  add_common(report_cmd, report_flags);
  report_cmd->add_option("--input", report_inputs, "Run directory or records file; repeatable")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    check(eapmt_set_log_level(log_level.c_str()));

    if (stats_cmd->parsed()) {
      eapmt_corpus* corpus = nullptr;
      check(eapmt_corpus_load(stats_path.c_str(), &corpus));
      std::unique_ptr<eapmt_corpus, decltype(&eapmt_corpus_free)> guard(corpus, eapmt_corpus_free);
      std::uint64_t poems = 0, lines = 0, tokens = 0;
      check(eapmt_corpus_stats(corpus, &poems, &lines, &tokens));
      std::cout << "poems: " << poems << "\nlines: " << lines << "\ntokens: " << tokens << "\n";
      char* warnings = nullptr;
      check(eapmt_corpus_warnings(corpus, &warnings));
      for (const auto& w : json::parse(take(warnings))) {
        std::cerr << "warning: " << w.get<std::string>() << "\n";
      }
      return kExitOk;
    }
    if (translate_cmd->parsed()) {
      json req = pairs_request(translate_poems, translate_test_size);
      req["templates"] = templates;
      if (!shots.empty()) req["shots"] = shots;
      return run_command("translate", translate_flags, req);
    }
    if (eapmt_cmd->parsed()) {
      json req = pairs_request(eapmt_poems, eapmt_test_size);
      if (!variant.empty()) req["variant"] = variant;
      return run_command("eapmt", eapmt_flags, req);
    }
    if (probe_cmd->parsed()) {
      json req = pairs_request(probe_poems, probe_test_size);
      if (!fractions.empty()) req["fractions"] = fractions;
      if (!sides.empty()) req["sides"] = sides;
      return run_command("probe", probe_flags, req);
    }
    if (make_cmd->parsed()) {
      json req = {{"inputs", make_inputs}, {"mode", make_kind}};
      if (!make_systems.empty()) req["systems"] = make_systems;
      if (!make_poems.empty()) req["pairs"] = make_poems;
      if (!make_judges.empty()) {
        req["judges"] = make_judges;
      } else {
        req["judge_count"] = judge_count;
      }
      return run_command("questionnaire-make", make_flags, req);
    }
    if (ingest_cmd->parsed()) {
      json req = {{"key", key_path}, {"answers", answers}, {"mode", ingest_kind},
                  {"condition", condition}};
      return run_command("questionnaire-ingest", ingest_flags, req);
    }
    if (judge_cmd->parsed()) {
      json req = {{"inputs", judge_inputs}};
      if (!judge_systems.empty()) req["systems"] = judge_systems;
      if (!judge_poems.empty()) req["pairs"] = judge_poems;
      return run_command("judge", judge_flags, req);
    }
    if (report_cmd->parsed()) {
      return run_command("report", report_flags, json{{"inputs", report_inputs}});
    }
  } catch (const CliFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  std::cerr << app.help();
  return kExitUsage;
}
