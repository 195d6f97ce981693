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

#include "eapmt/run.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "detail.hpp"
#include "eapmt/corpus.hpp"
#include "eapmt/error.hpp"
#include "eapmt/evaluation.hpp"
#include "eapmt/metrics.hpp"
#include "eapmt/translate.hpp"
#include "eapmt/unicode.hpp"
#include "eapmt/validation.hpp"

namespace eapmt::run {

using detail::json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kToolVersion = "1.0.0";

json model_to_json(const ModelSpec& m) {
  json j;
  j["name"] = m.name;
  j["endpoint"] = m.endpoint;
  j["temperature"] = m.temperature;
  j["top_p"] = m.top_p;
  j["max_tokens"] = m.max_tokens;
  j["timeout_s"] = m.request_timeout.count();
  return j;
}

ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  if (j.is_string()) {
    m.name = j.get<std::string>();
    return m;
  }
  m.name = j.at("name").get<std::string>();
  m.endpoint = j.value("endpoint", "");
  m.temperature = j.value("temperature", m.temperature);
  m.top_p = j.value("top_p", m.top_p);
  m.max_tokens = j.value("max_tokens", m.max_tokens);
  m.request_timeout = std::chrono::seconds(j.value("timeout_s", m.request_timeout.count()));
  return m;
}

json parse_request(std::string_view text) {
  if (unicode::trim(text).empty()) return json::object();
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "request must be a JSON object");
  }
  return j;
}

template <typename T>
std::vector<T> list_field(const json& req, const char* key) {
  if (!req.contains(key) || req[key].is_null()) return {};
  try {
    return req[key].get<std::vector<T>>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("request field '") + key +
                                                 "' has the wrong type");
  }
}

const ModelSpec& first_model(const RunConfig& cfg) {
  if (cfg.models.empty()) throw Error(ErrorCode::kInvalidArgument, "no model configured");
  return cfg.models.front();
}

Corpus load_config_corpus(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "no corpus configured");
  return load_corpus(cfg.corpus);
}

std::vector<PoemPair> resolve_pairs(const Corpus& corpus, const json& req, std::uint64_t seed) {
  auto ids = list_field<std::string>(req, "pairs");
  std::vector<PoemPair> out;
  if (!ids.empty()) {
    std::set<std::string> seen;
    for (const auto& id : ids) {
      if (!seen.insert(id).second) {
        throw Error(ErrorCode::kInvalidArgument, "pair '" + id + "' listed twice");
      }
      out.push_back(corpus.find(id));
    }
    return out;
  }
  if (req.contains("test_size")) {
    auto excluded = list_field<std::string>(req, "exclude");
    return sample_test_set(corpus, req["test_size"].get<std::size_t>(), seed,
                           std::set<std::string>(excluded.begin(), excluded.end()));
  }
  return corpus.pairs;
}

std::string jsonl(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string error_line(std::string_view pair_id, std::string_view stage, const Error& e) {
  json j;
  j["pair_id"] = pair_id;
  j["stage"] = stage;
  j["code"] = error_code_name(e.code());
  j["message"] = e.what();
  return j.dump();
}

class RunWriter {
 public:
  RunWriter(const RunConfig& cfg, std::string_view command) : cfg_(cfg), command_(command) {
    if (cfg.out.empty()) throw Error(ErrorCode::kInvalidArgument, "no output directory given");
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + cfg.out.string() + ": " + ec.message());
  }

  void write(const std::string& rel, std::string_view content) {
    detail::write_file_atomic(cfg_.out / rel, content);
    files_.insert(rel);
  }

  std::string finish(const json& request, std::size_t errors, std::size_t backend_calls,
                     std::string text) {
    json manifest;
    manifest["tool"] = "eapmt";
    manifest["version"] = kToolVersion;
    manifest["command"] = command_;
    manifest["created_at"] = detail::utc_timestamp();
    manifest["seed"] = cfg_.seed;
    manifest["mode"] = client_mode_name(cfg_.mode);
    manifest["config"] = json::parse(config_to_json(cfg_));
    if (!cfg_.corpus.empty() && fs::exists(cfg_.corpus)) {
      manifest["corpus_sha256"] = detail::sha256_hex(detail::read_file(cfg_.corpus));
    }
    manifest["request"] = request;
    manifest["outputs"] = std::vector<std::string>(files_.begin(), files_.end());
    manifest["errors"] = errors;
    manifest["backend_calls"] = backend_calls;
    detail::write_file_atomic(cfg_.out / "manifest.json", manifest.dump(2) + "\n");

    json result;
    result["out"] = cfg_.out.string();
    std::vector<std::string> files(files_.begin(), files_.end());
    files.push_back("manifest.json");
    result["files"] = files;
    result["errors"] = errors;
    result["text"] = std::move(text);
    return result.dump();
  }

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::set<std::string> files_;
};

class ClientHolder {
 public:
  ClientHolder(const RunConfig& cfg, LlmClient* override) {
    if (override) {
      client_ = override;
    } else {
      owned_ = make_client(cfg);
      client_ = owned_.get();
    }
  }
  LlmClient& get() { return *client_; }

 private:
  std::unique_ptr<LlmClient> owned_;
  LlmClient* client_ = nullptr;
};

EapmtVariant infer_variant(const ModelSpec& model) {
  return model.name.find("3.5") != std::string::npos ? EapmtVariant::kGpt35 : EapmtVariant::kGpt4;
}

// Records from run directories (records.jsonl inside) or record files.
std::vector<TranslationRecord> load_inputs(const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "no inputs given");
  std::vector<TranslationRecord> out;
  for (const auto& in : inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) p /= "records.jsonl";
    auto records = load_translation_records(p);
    out.insert(out.end(), std::make_move_iterator(records.begin()),
               std::make_move_iterator(records.end()));
  }
  return out;
}

// system label -> pair id -> record
using SystemRecords = std::map<std::string, std::map<std::string, TranslationRecord>>;

SystemRecords group_by_system(std::vector<TranslationRecord> records,
                              const std::vector<std::string>& wanted) {
  SystemRecords out;
  for (auto& r : records) {
    std::string label = record_system_label(r);
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), label) == wanted.end()) continue;
    auto& by_pair = out[label];
    if (by_pair.count(r.pair_id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "system '" + label + "' has two records for pair '" + r.pair_id + "'");
    }
    by_pair.emplace(r.pair_id, std::move(r));
  }
  for (const auto& w : wanted) {
    if (!out.count(w)) throw Error(ErrorCode::kNotFound, "no records for system '" + w + "'");
  }
  return out;
}

// Pairs that every system covers, in corpus order, or the requested ones.
std::vector<PoemPair> covered_pairs(const Corpus& corpus, const SystemRecords& systems,
                                    const json& req) {
  auto ids = list_field<std::string>(req, "pairs");
  std::vector<PoemPair> out;
  if (!ids.empty()) {
    for (const auto& id : ids) out.push_back(corpus.find(id));
    return out;
  }
  for (const auto& pair : corpus.pairs) {
    bool all = std::all_of(systems.begin(), systems.end(),
                           [&](const auto& s) { return s.second.count(pair.pair_id) > 0; });
    if (all) out.push_back(pair);
  }
  if (out.empty()) throw Error(ErrorCode::kNotFound, "no pair is covered by every system");
  return out;
}

// --- commands ----------------------------------------------------------------

std::string cmd_translate(const RunConfig& cfg, const json& req, LlmClient* override) {
  Corpus corpus = load_config_corpus(cfg);
  std::vector<PoemPair> test_set = resolve_pairs(corpus, req, cfg.seed);
  auto templates = list_field<std::string>(req, "templates");
  if (templates.empty()) throw Error(ErrorCode::kInvalidArgument, "no templates given");
  auto shots = list_field<int>(req, "shots");
  if (shots.empty()) shots = {0};
  if (cfg.models.empty()) throw Error(ErrorCode::kInvalidArgument, "no model configured");

  std::vector<GridCondition> conditions;
  for (const auto& model : cfg.models) {
    for (const auto& t : templates) {
      for (int k : shots) conditions.push_back({parse_template_id(t), k, model});
    }
  }
  ClientHolder client(cfg, override);
  RunWriter writer(cfg, "translate");
  GridResult grid = run_experiment_grid(client.get(), test_set, corpus, conditions, cfg.seed);

  std::vector<std::string> records;
  for (const auto& r : grid.records) records.push_back(r.to_json());
  std::vector<std::string> errors;
  for (const auto& e : grid.errors) errors.push_back(e.to_json());
  writer.write("records.jsonl", jsonl(records));
  writer.write("errors.jsonl", jsonl(errors));

  std::string text = std::to_string(grid.records.size()) + " records, " +
                     std::to_string(grid.errors.size()) + " errors\n";
  return writer.finish(req, grid.errors.size(), client.get().backend_calls(), text);
}

std::string cmd_eapmt(const RunConfig& cfg, const json& req, LlmClient* override) {
  Corpus corpus = load_config_corpus(cfg);
  std::vector<PoemPair> pairs = resolve_pairs(corpus, req, cfg.seed);
  if (cfg.models.empty()) throw Error(ErrorCode::kInvalidArgument, "no model configured");
  std::optional<EapmtVariant> variant;
  if (req.contains("variant") && !req["variant"].is_null()) {
    variant = parse_eapmt_variant(req["variant"].get<std::string>());
  }

  ClientHolder client(cfg, override);
  RunWriter writer(cfg, "eapmt");
  const std::size_t cells = cfg.models.size() * pairs.size();
  std::vector<std::optional<ExplanationRecord>> explanations(cells);
  std::vector<std::optional<TranslationRecord>> translations(cells);
  std::vector<std::optional<std::string>> errors(cells);

  parallel_for(cells, client.get().parallelism(), [&](std::size_t cell) {
    const ModelSpec& model = cfg.models[cell / pairs.size()];
    const PoemPair& pair = pairs[cell % pairs.size()];
    try {
      EapmtResult r = eapmt_translate(client.get(), pair.source, pair.pair_id, model,
                                      variant.value_or(infer_variant(model)));
      explanations[cell] = std::move(r.explanation);
      translations[cell] = std::move(r.translation);
    } catch (const EapmtStageError& e) {
      explanations[cell] = e.explanation();
      errors[cell] = error_line(pair.pair_id, "translation", e);
    } catch (const Error& e) {
      errors[cell] = error_line(pair.pair_id, "explanation", e);
    }
  });

  std::vector<std::string> expl_lines;
  std::vector<std::string> record_lines;
  std::vector<std::string> error_lines;
  std::string text;
  std::size_t shown = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    if (explanations[i]) expl_lines.push_back(explanations[i]->to_json());
    if (translations[i]) {
      record_lines.push_back(translations[i]->to_json());
      if (cells > 1) {
        text += (shown++ ? "\n" : "") + std::string("# ") + translations[i]->pair_id + " (" +
                translations[i]->model + ")\n";
      }
      text += translations[i]->text() + "\n";
    }
    if (errors[i]) error_lines.push_back(*errors[i]);
  }
  writer.write("explanations.jsonl", jsonl(expl_lines));
  writer.write("records.jsonl", jsonl(record_lines));
  writer.write("errors.jsonl", jsonl(error_lines));
  return writer.finish(req, error_lines.size(), client.get().backend_calls(), text);
}

ProbeResult probe_result_from_json(const json& j) {
  ProbeResult r;
  r.pair_id = j.at("pair_id").get<std::string>();
  r.side = parse_probe_side(j.at("side").get<std::string>());
  r.fraction = j.at("fraction").get<double>();
  r.prefix_line_count = j.value("prefix_line_count", std::size_t{0});
  r.suffix_line_count = j.value("suffix_line_count", std::size_t{0});
  r.generated_suffix = j.at("generated_suffix").get<std::string>();
  r.true_suffix = j.at("true_suffix").get<std::string>();
  r.raw_response = j.value("raw_response", "");
  return r;
}

std::string cmd_probe(const RunConfig& cfg, const json& req, LlmClient* override) {
  Corpus corpus = load_config_corpus(cfg);
  std::vector<PoemPair> pairs = resolve_pairs(corpus, req, cfg.seed);
  ProbeSpec base;
  base.model = first_model(cfg);
  auto fractions = list_field<double>(req, "fractions");
  if (!fractions.empty()) base.fractions = fractions;
  auto side_names = list_field<std::string>(req, "sides");
  std::vector<ProbeSide> sides;
  for (const auto& s : side_names) sides.push_back(parse_probe_side(s));
  if (sides.empty()) sides = {ProbeSide::kSource, ProbeSide::kTranslation};
  validate_probe_spec(base);

  ClientHolder client(cfg, override);
  RunWriter writer(cfg, "probe");
  const std::size_t cells = pairs.size() * sides.size();
  std::vector<ProbeRun> runs(cells);
  parallel_for(cells, client.get().parallelism(), [&](std::size_t cell) {
    ProbeSpec spec = base;
    spec.side = sides[cell % sides.size()];
    runs[cell] = run_probe(client.get(), pairs[cell / sides.size()], spec);
  });

  std::vector<ProbeResult> results;
  std::vector<std::string> result_lines;
  std::vector<std::string> error_lines;
  for (auto& run : runs) {
    for (auto& r : run.results) {
      result_lines.push_back(r.to_json());
      results.push_back(std::move(r));
    }
    for (const auto& e : run.errors) {
      json j;
      j["pair_id"] = e.pair_id;
      j["side"] = probe_side_name(e.side);
      j["fraction"] = e.fraction;
      j["message"] = e.message;
      error_lines.push_back(j.dump());
    }
  }
  writer.write("probe.jsonl", jsonl(result_lines));
  writer.write("errors.jsonl", jsonl(error_lines));
  std::string text;
  if (!results.empty()) {
    ProbeReport report = probe_report(results);
    writer.write("probe.csv", report.to_csv());
    writer.write("probe.md", report.to_markdown());
    text = report.to_markdown();
  }
  return writer.finish(req, error_lines.size(), client.get().backend_calls(), text);
}

std::vector<std::string> judge_ids_from(const json& req) {
  auto judges = list_field<std::string>(req, "judges");
  if (!judges.empty()) return judges;
  const int count = req.value("judge_count", 6);
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "judge_count must be >= 1");
  for (int i = 1; i <= count; ++i) judges.push_back("judge" + std::to_string(i));
  return judges;
}

std::string cmd_questionnaire_make(const RunConfig& cfg, const json& req) {
  Corpus corpus = load_config_corpus(cfg);
  SystemRecords systems = group_by_system(load_inputs(list_field<std::string>(req, "inputs")),
                                          list_field<std::string>(req, "systems"));
  std::vector<PoemPair> pairs = covered_pairs(corpus, systems, req);
  QuestionnaireMode mode = parse_questionnaire_mode(req.value("mode", "vote"));

  std::map<std::string, std::vector<TranslationRecord>> candidates;
  for (const auto& [label, by_pair] : systems) {
    auto& list = candidates[label];
    for (const auto& [pair_id, record] : by_pair) list.push_back(record);
  }
  QuestionnaireSet set = make_questionnaire(pairs, candidates, cfg.seed, mode, judge_ids_from(req));

  RunWriter writer(cfg, "questionnaire-make");
  for (const auto& q : set.questionnaires) {
    writer.write("questionnaires/" + q.judge_id + ".md", q.markdown);
    writer.write("questionnaires/" + q.judge_id + ".csv", q.answer_csv);
  }
  writer.write("key.json", set.key.to_json());
  std::string text = std::to_string(set.questionnaires.size()) + " questionnaires, " +
                     std::to_string(pairs.size()) + " poems, " +
                     std::to_string(systems.size()) + " systems\n";
  return writer.finish(req, 0, 0, text);
}

std::string cmd_questionnaire_ingest(const RunConfig& cfg, const json& req) {
  if (!req.contains("key")) throw Error(ErrorCode::kInvalidArgument, "no blinding key given");
  BlindingKey key = BlindingKey::load(req["key"].get<std::string>());
  auto answers = list_field<std::string>(req, "answers");
  if (answers.empty()) throw Error(ErrorCode::kInvalidArgument, "no answer sheets given");
  QuestionnaireMode mode = parse_questionnaire_mode(req.value("mode", "vote"));
  const std::string condition = req.value("condition", "votes");

  RunWriter writer(cfg, "questionnaire-ingest");
  std::string text;
  if (mode == QuestionnaireMode::kVote) {
    std::vector<Ballot> ballots;
    for (const auto& a : answers) {
      auto part = parse_ballots_csv(detail::read_file(a));
      ballots.insert(ballots.end(), part.begin(), part.end());
    }
    VoteTable table{key.systems(), {{condition, aggregate_votes(ballots, key)}}};
    writer.write("votes.csv", table.to_csv());
    writer.write("votes.md", table.to_markdown());
    text = table.to_markdown();
  } else {
    std::vector<ScoreSheet> sheets;
    for (const auto& a : answers) {
      auto part = parse_score_sheets_csv(detail::read_file(a));
      sheets.insert(sheets.end(), part.begin(), part.end());
    }
    ScoreTable scores = aggregate_scores(sheets, key);
    SixCountTable six = count_six(sheets, key);
    writer.write("scores.csv", scores.to_csv());
    writer.write("scores.md", scores.to_markdown());
    writer.write("six.csv", six.to_csv());
    writer.write("six.md", six.to_markdown());
    text = scores.to_markdown() + "\n" + six.to_markdown();
  }
  return writer.finish(req, 0, 0, text);
}

std::string cmd_judge(const RunConfig& cfg, const json& req, LlmClient* override) {
  Corpus corpus = load_config_corpus(cfg);
  SystemRecords systems = group_by_system(load_inputs(list_field<std::string>(req, "inputs")),
                                          list_field<std::string>(req, "systems"));
  if (systems.size() < 2 || systems.size() > 5) {
    throw Error(ErrorCode::kInvalidArgument,
                "the judge compares 2 to 5 systems, got " + std::to_string(systems.size()) +
                    "; pick them with \"systems\"");
  }
  std::vector<PoemPair> pairs = covered_pairs(corpus, systems, req);
  const ModelSpec& model = first_model(cfg);

  ClientHolder client(cfg, override);
  RunWriter writer(cfg, "judge");
  std::vector<std::optional<JudgeResult>> results(pairs.size());
  std::vector<std::optional<std::string>> errors(pairs.size());
  parallel_for(pairs.size(), client.get().parallelism(), [&](std::size_t i) {
    const PoemPair& pair = pairs[i];
    std::vector<JudgeCandidate> candidates;
    for (const auto& [label, by_pair] : systems) {
      auto it = by_pair.find(pair.pair_id);
      if (it == by_pair.end()) {
        errors[i] = error_line(pair.pair_id, "judge",
                               Error(ErrorCode::kNotFound, "no candidate from " + label));
        return;
      }
      candidates.push_back({label, it->second.text()});
    }
    try {
      results[i] = llm_judge(client.get(), pair, candidates, model, cfg.seed);
    } catch (const JudgeParseError& e) {
      json j = json::parse(error_line(pair.pair_id, "judge", e));
      j["raw_text"] = e.raw_text();
      errors[i] = j.dump();
    } catch (const Error& e) {
      errors[i] = error_line(pair.pair_id, "judge", e);
    }
  });

  std::vector<std::string> raw_lines;
  std::vector<std::string> error_lines;
  std::vector<ScoreSheet> sheets;
  BlindingKey key(cfg.seed);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (results[i]) {
      json j;
      j["pair_id"] = pairs[i].pair_id;
      j["model"] = model.name;
      j["prompt"] = results[i]->prompt;
      j["raw_response"] = results[i]->raw_response;
      raw_lines.push_back(j.dump());
      sheets.insert(sheets.end(), results[i]->sheets.begin(), results[i]->sheets.end());
      key.merge(results[i]->key);
    }
    if (errors[i]) error_lines.push_back(*errors[i]);
  }
  writer.write("judge.jsonl", jsonl(raw_lines));
  writer.write("errors.jsonl", jsonl(error_lines));
  std::string text;
  if (!sheets.empty()) {
    writer.write("judge_sheets.csv", score_sheets_csv(sheets));
    writer.write("judge_key.json", key.to_json());
    ScoreTable table = aggregate_scores(sheets, key);
    writer.write("judge_scores.csv", table.to_csv());
    writer.write("judge_scores.md", table.to_markdown());
    text = table.to_markdown();
  }
  return writer.finish(req, error_lines.size(), client.get().backend_calls(), text);
}

std::string cmd_report(const RunConfig& cfg, const json& req) {
  Corpus corpus = load_config_corpus(cfg);
  auto inputs = list_field<std::string>(req, "inputs");
  if (inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "no inputs given");

  std::vector<TranslationRecord> records;
  std::vector<ProbeResult> probes;
  std::vector<ScoreSheet> judge_sheets;
  BlindingKey judge_key;
  bool have_judge = false;
  for (const auto& in : inputs) {
    fs::path p = in;
    if (!fs::is_directory(p)) {
      auto part = load_translation_records(p);
      records.insert(records.end(), part.begin(), part.end());
      continue;
    }
    if (fs::exists(p / "records.jsonl")) {
      auto part = load_translation_records(p / "records.jsonl");
      records.insert(records.end(), part.begin(), part.end());
    }
    if (fs::exists(p / "probe.jsonl")) {
      for (const auto& line : unicode::split_lines(detail::read_file(p / "probe.jsonl"))) {
        if (!unicode::trim(line).empty()) probes.push_back(probe_result_from_json(json::parse(line)));
      }
    }
    if (fs::exists(p / "judge_sheets.csv") && fs::exists(p / "judge_key.json")) {
      auto part = parse_score_sheets_csv(detail::read_file(p / "judge_sheets.csv"));
      judge_sheets.insert(judge_sheets.end(), part.begin(), part.end());
      BlindingKey k = BlindingKey::load(p / "judge_key.json");
      if (!have_judge) judge_key = BlindingKey(k.seed());
      judge_key.merge(k);
      have_judge = true;
    }
  }

  RunWriter writer(cfg, "report");
  std::vector<ScoreRow> rows;
  std::string md = "# Report\n";
  if (!records.empty()) {
    SystemRecords systems = group_by_system(records, {});
    std::vector<std::unique_ptr<MetricAdapter>> adapters;
    for (const auto& m : cfg.metrics) {
      adapters.push_back(std::make_unique<HttpMetricAdapter>(m.name, m.endpoint));
    }
    md += "\n## Automatic metrics\n\n";
    std::vector<std::string> head = {"", "BLEU"};
    for (const auto& a : adapters) head.push_back(a->name());
    head.push_back("Poems");
    std::string table = "|";
    for (const auto& h : head) table += " " + h + " |";
    table += "\n|";
    for (std::size_t i = 0; i < head.size(); ++i) table += "---|";
    table += "\n";

    const BleuConfig bleu_cfg = bleu_config_for_chinese();
    for (const auto& [label, by_pair] : systems) {
      std::vector<std::string> hyps;
      std::vector<std::string> refs;
      std::vector<std::string> srcs;
      for (const auto& [pair_id, record] : by_pair) {
        const PoemPair& pair = corpus.find(pair_id);
        hyps.push_back(record.text());
        refs.push_back(format_poem(pair.reference));
        srcs.push_back(format_poem(pair.source));
      }
      BleuScore bleu = corpus_bleu(hyps, refs, bleu_cfg);
      rows.push_back({label, "BLEU", bleu.signature, bleu.score});
      table += "| " + label + " | " + bleu.formatted() + " |";
      for (const auto& a : adapters) {
        auto scores = score_with_adapter(*a, hyps, refs, srcs);
        double mean = 0.0;
        for (double s : scores) mean += s;
        mean /= static_cast<double>(scores.size());
        rows.push_back({label, a->name(), "endpoint:" + a->name(), mean});
        table += " " + detail::format_fixed(mean, 4) + " |";
      }
      table += " " + std::to_string(by_pair.size()) + " |\n";
    }
    md += table;
    writer.write("scores.csv", scores_csv(rows));
  }
  if (!probes.empty()) {
    ProbeReport report = probe_report(probes);
    md += "\n## Continuation probe (BLEU)\n\n" + report.to_markdown();
  }
  if (have_judge && !judge_sheets.empty()) {
    ScoreTable table = aggregate_scores(judge_sheets, judge_key);
    md += "\n## LLM judge\n\n" + table.to_markdown();
  }
  if (records.empty() && probes.empty() && !have_judge) {
    throw Error(ErrorCode::kNotFound, "inputs contain no records, probes or judge sheets");
  }
  writer.write("report.md", md);
  return writer.finish(req, 0, 0, md);
}

}  // namespace

void RunConfig::validate() const {
  if (parallelism < 1 || parallelism > 1024) {
    throw Error(ErrorCode::kInvalidArgument, "parallelism must be between 1 and 1024");
  }
  for (const auto& m : models) m.validate();
  if (mode == ClientMode::kReplay) {
    if (!cache_dir) throw Error(ErrorCode::kInvalidArgument, "replay mode needs a cache directory");
    if (!fs::is_directory(*cache_dir)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "replay cache " + cache_dir->string() + " does not exist");
    }
  }
  for (const auto& m : metrics) {
    if (m.name.empty() || m.endpoint.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "metric endpoints need a name and an endpoint");
    }
  }
}

RunConfig config_from_json(std::string_view text) {
  json j = parse_request(text);
  RunConfig cfg;
  try {
    cfg.corpus = j.value("corpus", "");
    if (j.contains("models")) {
      for (const auto& m : j["models"]) cfg.models.push_back(model_from_json(m));
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.out = j.value("out", "");
    cfg.mode = parse_client_mode(j.value("mode", "live"));
    if (j.contains("cache") && !j["cache"].is_null() && !j["cache"].get<std::string>().empty()) {
      cfg.cache_dir = j["cache"].get<std::string>();
    }
    cfg.parallelism = j.value("parallel", std::size_t{4});
    cfg.api_base = j.value("api_base", cfg.api_base);
    cfg.api_key = j.value("api_key", "");
    if (j.contains("metrics")) {
      for (const auto& m : j["metrics"]) {
        cfg.metrics.push_back({m.at("name").get<std::string>(), m.at("endpoint").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed run config: ") + e.what());
  }
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["corpus"] = cfg.corpus.string();
  j["models"] = json::array();
  for (const auto& m : cfg.models) j["models"].push_back(model_to_json(m));
  j["seed"] = cfg.seed;
  j["mode"] = client_mode_name(cfg.mode);
  j["cache"] = cfg.cache_dir ? cfg.cache_dir->string() : "";
  j["parallel"] = cfg.parallelism;
  j["api_base"] = cfg.api_base;
  j["metrics"] = json::array();
  for (const auto& m : cfg.metrics) j["metrics"].push_back({{"name", m.name}, {"endpoint", m.endpoint}});
  return j.dump();
}

std::unique_ptr<LlmClient> make_client(const RunConfig& cfg) {
  ClientOptions options;
  options.mode = cfg.mode;
  options.cache_dir = cfg.cache_dir;
  options.parallelism = cfg.parallelism;
  std::shared_ptr<ChatBackend> backend;
  if (cfg.mode == ClientMode::kReplay) {
    backend = std::make_shared<OfflineBackend>();
  } else {
    if (cfg.api_key.empty()) spdlog::warn("no API key set; requests are sent unauthenticated");
    backend = std::make_shared<HttpBackend>(cfg.api_base, cfg.api_key);
  }
  return std::make_unique<LlmClient>(std::move(backend), std::move(options));
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> kNames = {
      "translate", "eapmt", "probe", "questionnaire-make", "questionnaire-ingest", "judge", "report"};
  return kNames;
}

std::string execute(std::string_view command, const RunConfig& cfg, std::string_view request_json,
                    LlmClient* client) {
  cfg.validate();
  json req = parse_request(request_json);
  if (command == "translate") return cmd_translate(cfg, req, client);
  if (command == "eapmt") return cmd_eapmt(cfg, req, client);
  if (command == "probe") return cmd_probe(cfg, req, client);
  if (command == "questionnaire-make") return cmd_questionnaire_make(cfg, req);
  if (command == "questionnaire-ingest") return cmd_questionnaire_ingest(cfg, req);
  if (command == "judge") return cmd_judge(cfg, req, client);
  if (command == "report") return cmd_report(cfg, req);
  throw Error(ErrorCode::kInvalidArgument, "unknown command '" + std::string(command) + "'");
}

}  // namespace eapmt::run
