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

#include "eapmt/translate.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "detail.hpp"
#include "eapmt/unicode.hpp"

namespace eapmt {

using detail::json;

std::string_view system_kind_name(SystemKind kind) {
  switch (kind) {
    case SystemKind::kDirect: return "direct";
    case SystemKind::kEapmt: return "eapmt";
    case SystemKind::kExternal: return "external";
  }
  return "direct";
}

SystemKind parse_system_kind(std::string_view name) {
  if (name == "direct") return SystemKind::kDirect;
  if (name == "eapmt") return SystemKind::kEapmt;
  if (name == "external") return SystemKind::kExternal;
  throw Error(ErrorCode::kSchema, "unknown system label '" + std::string(name) + "'");
}

std::string_view eapmt_variant_name(EapmtVariant v) {
  return v == EapmtVariant::kGpt35 ? "gpt35" : "gpt4";
}

EapmtVariant parse_eapmt_variant(std::string_view name) {
  if (name == "gpt35" || name == "gpt-3.5") return EapmtVariant::kGpt35;
  if (name == "gpt4" || name == "gpt-4") return EapmtVariant::kGpt4;
  throw Error(ErrorCode::kInvalidArgument, "unknown EAPMT variant '" + std::string(name) + "'");
}

// --- records -----------------------------------------------------------------

std::string ExplanationRecord::to_json() const {
  json j;
  j["explanation_id"] = explanation_id;
  j["pair_id"] = pair_id;
  j["model"] = model;
  j["prompt_template_id"] = template_name(prompt_template_id);
  j["explanation_text"] = explanation_text;
  j["prompt"] = prompt;
  return j.dump();
}

ExplanationRecord ExplanationRecord::from_json(std::string_view line) {
  try {
    json j = json::parse(line);
    ExplanationRecord r;
    r.explanation_id = j.at("explanation_id").get<std::string>();
    r.pair_id = j.at("pair_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.prompt_template_id = parse_template_id(j.at("prompt_template_id").get<std::string>());
    r.explanation_text = j.at("explanation_text").get<std::string>();
    r.prompt = j.value("prompt", "");
    if (r.explanation_text.empty()) throw Error(ErrorCode::kSchema, "empty explanation_text");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed explanation record: ") + e.what());
  }
}

void TranslationRecord::validate() const {
  if (output_lines.empty()) {
    throw Error(ErrorCode::kSchema, "translation record for '" + pair_id + "' has no output lines");
  }
  if (system == SystemKind::kEapmt && !explanation_id) {
    throw Error(ErrorCode::kSchema, "eapmt record for '" + pair_id + "' lacks an explanation_id");
  }
  if (system == SystemKind::kDirect && explanation_id) {
    throw Error(ErrorCode::kSchema, "direct record for '" + pair_id + "' carries an explanation_id");
  }
  if (!example_ids.empty() && static_cast<std::size_t>(shots) != example_ids.size()) {
    throw Error(ErrorCode::kSchema, "record for '" + pair_id + "' has shots=" +
                                        std::to_string(shots) + " but " +
                                        std::to_string(example_ids.size()) + " example ids");
  }
  if (std::find(example_ids.begin(), example_ids.end(), pair_id) != example_ids.end()) {
    throw Error(ErrorCode::kSchema, "record for '" + pair_id + "' uses itself as a few-shot example");
  }
}

std::string TranslationRecord::text() const { return unicode::join(output_lines, "\n"); }

std::string TranslationRecord::to_json() const {
  json j;
  j["pair_id"] = pair_id;
  j["system"] = system_kind_name(system);
  j["model"] = model;
  j["prompt_template_id"] = prompt_template_id;
  j["shots"] = shots;
  j["explanation_id"] = explanation_id ? json(*explanation_id) : json(nullptr);
  j["example_ids"] = example_ids;
  j["output_lines"] = output_lines;
  j["raw_response"] = raw_response;
  j["prompt"] = prompt;
  return j.dump();
}

TranslationRecord TranslationRecord::from_json(std::string_view line) {
  TranslationRecord r;
  try {
    json j = json::parse(line);
    r.pair_id = j.at("pair_id").get<std::string>();
    r.system = parse_system_kind(j.at("system").get<std::string>());
    r.model = j.value("model", "");
    r.prompt_template_id = j.value("prompt_template_id", "");
    r.shots = j.value("shots", 0);
    if (j.contains("explanation_id") && !j["explanation_id"].is_null()) {
      r.explanation_id = j["explanation_id"].get<std::string>();
    }
    if (j.contains("example_ids")) r.example_ids = j["example_ids"].get<std::vector<std::string>>();
    r.output_lines = j.at("output_lines").get<std::vector<std::string>>();
    r.raw_response = j.value("raw_response", "");
    r.prompt = j.value("prompt", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed translation record: ") + e.what());
  }
  r.validate();
  return r;
}

std::vector<TranslationRecord> load_translation_records(const std::filesystem::path& path) {
  std::vector<TranslationRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : unicode::split_lines(detail::read_file(path))) {
    ++line_no;
    if (unicode::trim(line).empty()) continue;
    try {
      out.push_back(TranslationRecord::from_json(line));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::string> response_lines(std::string_view response) {
  std::vector<std::string> lines = unicode::split_lines(response);
  std::size_t b = 0;
  std::size_t e = lines.size();
  while (b < e && unicode::trim(lines[b]).empty()) ++b;
  while (e > b && unicode::trim(lines[e - 1]).empty()) --e;
  return {lines.begin() + static_cast<std::ptrdiff_t>(b), lines.begin() + static_cast<std::ptrdiff_t>(e)};
}

namespace {

bool is_direct_template(TemplateId id) {
  switch (id) {
    case TemplateId::kH1: case TemplateId::kH2: case TemplateId::kH3:
    case TemplateId::kP1: case TemplateId::kP2: case TemplateId::kP3:
    case TemplateId::kP4: case TemplateId::kP5:
    case TemplateId::kFewshotGpt35: case TemplateId::kFewshotGpt4:
      return true;
    default:
      return false;
  }
}

bool is_fewshot(TemplateId id) {
  return id == TemplateId::kFewshotGpt35 || id == TemplateId::kFewshotGpt4;
}

void reject_echo(std::string_view prompt, std::string_view response) {
  if (unicode::trim(response) == unicode::trim(prompt)) {
    throw Error(ErrorCode::kDegenerateOutput, "model response echoes the prompt verbatim");
  }
}

}  // namespace

TranslationRecord translate_direct(LlmClient& client, const Poem& source, TemplateId template_id,
                                   const ModelSpec& model, std::span<const PoemPair> examples,
                                   std::string_view pair_id) {
  if (!is_direct_template(template_id)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(template_name(template_id)) + " is not a translation template");
  }
  RenderedPrompt prompt;
  if (is_fewshot(template_id)) {
    prompt = build_fewshot(template_id, examples, source);
  } else {
    if (!examples.empty()) {
      throw Error(ErrorCode::kInvalidArgument, std::string(template_name(template_id)) +
                                                   " is zero-shot; use a FEWSHOT_* template");
    }
    prompt = render(get_template(template_id), {{"poem", format_poem(source)}});
  }
  std::string response = client.complete(model, prompt);
  reject_echo(prompt.final_text, response);

  TranslationRecord record;
  record.pair_id = std::string(pair_id);
  record.system = SystemKind::kDirect;
  record.model = model.name;
  record.prompt_template_id = std::string(template_name(template_id));
  record.shots = static_cast<int>(examples.size());
  for (const auto& ex : examples) record.example_ids.push_back(ex.pair_id);
  record.output_lines = response_lines(response);
  record.raw_response = std::move(response);
  record.prompt = std::move(prompt.final_text);
  if (record.output_lines.empty()) {
    throw Error(ErrorCode::kDegenerateOutput, "model response has no content lines");
  }
  return record;
}

EapmtResult eapmt_translate(LlmClient& client, const Poem& source, std::string_view pair_id,
                            const ModelSpec& model, EapmtVariant variant) {
  if (source.language != Language::kEn) {
    throw Error(ErrorCode::kInvalidArgument, "EAPMT expects an English source poem");
  }
  const bool gpt35 = variant == EapmtVariant::kGpt35;
  const TemplateId step1_id = gpt35 ? TemplateId::kEapmtStep1Gpt35 : TemplateId::kEapmtStep1Gpt4;
  const TemplateId step2_id = gpt35 ? TemplateId::kEapmtStep2Gpt35 : TemplateId::kEapmtStep2Gpt4;
  const std::string poem_text = format_poem(source);

  RenderedPrompt step1 = render(get_template(step1_id), {{"poem", poem_text}});
  std::string explanation_text;
  try {
    explanation_text = client.complete(model, step1);
    reject_echo(step1.final_text, explanation_text);
  } catch (const Error& e) {
    throw Error(ErrorCode::kExplanationStage,
                "explanation step failed for '" + std::string(pair_id) + "': " + e.what());
  }

  ExplanationRecord explanation;
  explanation.pair_id = std::string(pair_id);
  explanation.model = model.name;
  explanation.prompt_template_id = step1_id;
  explanation.explanation_text = explanation_text;
  explanation.prompt = step1.final_text;
  explanation.explanation_id =
      detail::sha256_hex(explanation.pair_id + '\0' + model.name + '\0' +
                         std::string(template_name(step1_id)) + '\0' + explanation_text)
          .substr(0, 16);

  RenderedPrompt step2 = render(get_template(step2_id),
                                {{"explanation", explanation_text}, {"poem", poem_text}});
  std::string response;
  try {
    response = client.complete(model, step2);
    reject_echo(step2.final_text, response);
  } catch (const Error& e) {
    throw EapmtStageError(
        "translation step failed for '" + std::string(pair_id) + "': " + e.what(), explanation);
  }

  TranslationRecord record;
  record.pair_id = std::string(pair_id);
  record.system = SystemKind::kEapmt;
  record.model = model.name;
  record.prompt_template_id = std::string(template_name(step2_id));
  record.shots = 0;
  record.explanation_id = explanation.explanation_id;
  record.output_lines = response_lines(response);
  record.raw_response = std::move(response);
  record.prompt = std::move(step2.final_text);
  if (record.output_lines.empty()) {
    throw EapmtStageError("translation step returned no content lines", explanation);
  }
  return {std::move(explanation), std::move(record)};
}

std::string CellError::to_json() const {
  json j;
  j["pair_id"] = pair_id;
  j["condition_index"] = condition_index;
  j["template_id"] = template_id;
  j["shots"] = shots;
  j["model"] = model;
  j["code"] = code;
  j["message"] = message;
  return j.dump();
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

GridResult run_experiment_grid(LlmClient& client, std::span<const PoemPair> test_set,
                               const Corpus& pool, const std::vector<GridCondition>& conditions,
                               std::uint64_t seed) {
  if (conditions.empty()) throw Error(ErrorCode::kInvalidArgument, "grid needs at least one condition");

  std::set<std::string> test_ids;
  for (const auto& p : test_set) test_ids.insert(p.pair_id);

  // One seed for all conditions: smaller shot sets are prefixes of larger ones.
  std::vector<std::vector<PoemPair>> examples(conditions.size());
  std::vector<std::optional<std::string>> example_errors(conditions.size());
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    if (conditions[c].shots == 0) continue;
    try {
      examples[c] = sample_test_set(pool, static_cast<std::size_t>(conditions[c].shots), seed, test_ids);
    } catch (const Error& e) {
      example_errors[c] = e.what();
    }
  }

  const std::size_t cells = test_set.size() * conditions.size();
  std::vector<std::optional<TranslationRecord>> records(cells);
  std::vector<std::optional<CellError>> errors(cells);

  parallel_for(cells, client.parallelism(), [&](std::size_t cell) {
    const PoemPair& pair = test_set[cell / conditions.size()];
    const std::size_t c = cell % conditions.size();
    const GridCondition& cond = conditions[c];
    CellError err{pair.pair_id, c, std::string(template_name(cond.template_id)), cond.shots,
                  cond.model.name, "", ""};
    try {
      if (example_errors[c]) throw Error(ErrorCode::kInvalidArgument, *example_errors[c]);
      records[cell] = translate_direct(client, pair.source, cond.template_id, cond.model,
                                       examples[c], pair.pair_id);
    } catch (const Error& e) {
      err.code = error_code_name(e.code());
      err.message = e.what();
      errors[cell] = std::move(err);
    } catch (const std::exception& e) {
      err.code = error_code_name(ErrorCode::kInternal);
      err.message = e.what();
      errors[cell] = std::move(err);
    }
  });

  GridResult result;
  for (std::size_t i = 0; i < cells; ++i) {
    if (records[i]) result.records.push_back(std::move(*records[i]));
    if (errors[i]) {
      spdlog::warn("grid cell {} / {} failed: {}", errors[i]->pair_id, errors[i]->template_id,
                   errors[i]->message);
      result.errors.push_back(std::move(*errors[i]));
    }
  }
  return result;
}

}  // namespace eapmt
