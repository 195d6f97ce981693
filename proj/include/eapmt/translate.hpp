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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eapmt/corpus.hpp"
#include "eapmt/error.hpp"
#include "eapmt/llm_client.hpp"
#include "eapmt/prompts.hpp"

namespace eapmt {

enum class SystemKind { kDirect, kEapmt, kExternal };

std::string_view system_kind_name(SystemKind kind);
SystemKind parse_system_kind(std::string_view name);

struct ExplanationRecord {
  std::string explanation_id;
  std::string pair_id;
  std::string model;
  std::string explanation_text;
  TemplateId prompt_template_id = TemplateId::kEapmtStep1Gpt4;
  std::string prompt;

  std::string to_json() const;
  static ExplanationRecord from_json(std::string_view line);
  bool operator==(const ExplanationRecord&) const = default;
};

struct TranslationRecord {
  std::string pair_id;
  SystemKind system = SystemKind::kDirect;
  std::string model;
  std::string prompt_template_id;  // template name; free-form for external systems
  int shots = 0;
  std::optional<std::string> explanation_id;
  std::vector<std::string> example_ids;
  std::vector<std::string> output_lines;
  std::string raw_response;
  std::string prompt;

  // Throws Error(kSchema) when an invariant fails.
  void validate() const;
  std::string text() const;  // output lines joined by newlines

  std::string to_json() const;
  static TranslationRecord from_json(std::string_view line);
  bool operator==(const TranslationRecord&) const = default;
};

std::vector<TranslationRecord> load_translation_records(const std::filesystem::path& path);

// Splits on newlines and drops leading/trailing blank lines.
std::vector<std::string> response_lines(std::string_view response);

TranslationRecord translate_direct(LlmClient& client, const Poem& source, TemplateId template_id,
                                   const ModelSpec& model, std::span<const PoemPair> examples,
                                   std::string_view pair_id);

enum class EapmtVariant { kGpt35, kGpt4 };

std::string_view eapmt_variant_name(EapmtVariant v);
EapmtVariant parse_eapmt_variant(std::string_view name);

struct EapmtResult {
  ExplanationRecord explanation;
  TranslationRecord translation;
};

// Step 1 explains the poem; step 2 translates with the explanation embedded.
// Step-1 failures throw kExplanationStage before any step-2 request; step-2
// failures throw EapmtStageError carrying the explanation.
EapmtResult eapmt_translate(LlmClient& client, const Poem& source, std::string_view pair_id,
                            const ModelSpec& model, EapmtVariant variant);

class EapmtStageError : public Error {
 public:
  EapmtStageError(const std::string& message, ExplanationRecord explanation)
      : Error(ErrorCode::kTranslationStage, message), explanation_(std::move(explanation)) {}
  const ExplanationRecord& explanation() const { return explanation_; }

 private:
  ExplanationRecord explanation_;
};

struct GridCondition {
  TemplateId template_id;
  int shots = 0;
  ModelSpec model;
};

struct CellError {
  std::string pair_id;
  std::size_t condition_index = 0;
  std::string template_id;
  int shots = 0;
  std::string model;
  std::string code;
  std::string message;

  std::string to_json() const;
};

struct GridResult {
  std::vector<TranslationRecord> records;
  std::vector<CellError> errors;
};

// One cell per (poem, condition), poem-major. Few-shot examples come from
// `pool` minus the test set, sampled once per condition with `seed`.
GridResult run_experiment_grid(LlmClient& client, std::span<const PoemPair> test_set,
                               const Corpus& pool, const std::vector<GridCondition>& conditions,
                               std::uint64_t seed);

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace eapmt
