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
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eapmt/corpus.hpp"

namespace eapmt {

enum class TemplateId {
  kH1,
  kH2,
  kH3,
  kP1,
  kP2,
  kP3,
  kP4,
  kP5,
  kFewshotGpt35,
  kFewshotGpt4,
  kEapmtStep1Gpt35,
  kEapmtStep2Gpt35,
  kEapmtStep1Gpt4,
  kEapmtStep2Gpt4,
  kContinuation,
  kContinuationZh,
  kJudge,
  kPoeticPickEn,
  kPoeticPickZh,
};

std::string_view template_name(TemplateId id);
TemplateId parse_template_id(std::string_view name);
const std::vector<TemplateId>& all_template_ids();

// Templates with fixed reference wording, covered by golden files. The zh
// continuation and the poetic-line picks are this project's own.
bool is_transcribed(TemplateId id);

using Bindings = std::map<std::string, std::string, std::less<>>;

// Placeholders are written {{name}}.
struct PromptTemplate {
  TemplateId id;
  std::string text;
  std::set<std::string, std::less<>> placeholders;
};

struct RenderedPrompt {
  TemplateId template_id;
  std::string final_text;
  Bindings bindings;
};

// Names of the {{...}} markers in `text`, in first-appearance order.
std::vector<std::string> scan_placeholders(std::string_view text);

const PromptTemplate& get_template(TemplateId id);
// The judge rubric for `count` candidates (2..5); count 5 equals get_template(kJudge).
PromptTemplate judge_template(std::size_t count);

// Throws Error(kInvalidArgument) listing missing and unexpected names.
RenderedPrompt render(const PromptTemplate& tmpl, const Bindings& bindings);

// Title line followed by the poem lines, stanza breaks kept as blank lines.
std::string format_poem(const Poem& poem);
std::string format_lines(const std::vector<std::string>& lines);

// Few-shot prompt in the table layout; k must be 0, 1, 3 or 5.
RenderedPrompt build_fewshot(TemplateId id, std::span<const PoemPair> examples,
                             const Poem& source);

// One file per template, named <ID>.txt.
void export_templates(const std::filesystem::path& dir);

}  // namespace eapmt
