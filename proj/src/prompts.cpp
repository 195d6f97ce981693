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

#include "eapmt/prompts.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>

#include "detail.hpp"
#include "eapmt/error.hpp"
#include "eapmt/unicode.hpp"

namespace eapmt {

namespace {

struct Entry {
  TemplateId id;
  std::string_view name;
  bool transcribed;
};

constexpr std::array<Entry, 19> kEntries = {{
    {TemplateId::kH1, "H1", true},
    {TemplateId::kH2, "H2", true},
    {TemplateId::kH3, "H3", true},
    {TemplateId::kP1, "P1", true},
    {TemplateId::kP2, "P2", true},
    {TemplateId::kP3, "P3", true},
    {TemplateId::kP4, "P4", true},
    {TemplateId::kP5, "P5", true},
    {TemplateId::kFewshotGpt35, "FEWSHOT_GPT35", true},
    {TemplateId::kFewshotGpt4, "FEWSHOT_GPT4", true},
    {TemplateId::kEapmtStep1Gpt35, "EAPMT_STEP1_GPT35", true},
    {TemplateId::kEapmtStep2Gpt35, "EAPMT_STEP2_GPT35", true},
    {TemplateId::kEapmtStep1Gpt4, "EAPMT_STEP1_GPT4", true},
    {TemplateId::kEapmtStep2Gpt4, "EAPMT_STEP2_GPT4", true},
    {TemplateId::kContinuation, "CONTINUATION", true},
    {TemplateId::kContinuationZh, "CONTINUATION_ZH", false},
    {TemplateId::kJudge, "JUDGE", true},
    {TemplateId::kPoeticPickEn, "POETIC_PICK_EN", false},
    {TemplateId::kPoeticPickZh, "POETIC_PICK_ZH", false},
}};

constexpr std::string_view kH1 = "Please provide the Chinese translation for these sentences:";
constexpr std::string_view kH2 = "Please provide the Chinese translation for this poem:";
constexpr std::string_view kH3 = "Please translate this English poem into modern Chinese poetry:";

constexpr std::string_view kP1 =
    "Please translate the following modern English poem into modern Chinese poetry, "
    "considering its cultural and historical context in which it was written. Maintain the "
    "tone, style, and emotional impact of the original poem.";
constexpr std::string_view kP2 =
    "Translate this modern English poem into modern Chinese poetry, focusing on preserving "
    "the vivid imagery and metaphoric language. Ensure the translation conveys the same visual "
    "and sensory experiences as the original.";
constexpr std::string_view kP3 =
    "Translate the following modern English poem into modern Chinese poetry, making sure to "
    "maintain its rhyme scheme and rhythm to the best extent possible. The translation should "
    "attempt to replicate the musicality and flow of the original text.";
constexpr std::string_view kP4 =
    "Translate this modern English poem into modern Chinese poetry, ensuring the literal "
    "meaning of each line is accurately conveyed. The focus here is on the direct translation "
    "of the words and phrases, rather than on preserving the poetic devices used in the "
    "original.";
constexpr std::string_view kP5 =
    "Translate the following modern English poem into modern Chinese poetry, taking into "
    "account the unique style of the poet. Try to capture the author's voice, style, and "
    "idiosyncrasies in the translated version.";

constexpr std::string_view kJudgeIntro =
    "Please evaluate the following {COUNT} candidate translations based on eight criteria: "
    "Overall Impression, Similarity, Fidelity, Line-breaking, Meaningfulness, Poeticity, "
    "Accuracy, and Errors. In this context, English poetry serves as the source language, and "
    "the reference translation is considered the gold standard. The score for each criterion "
    "should range from 1 to 6, with higher scores indicating superior translation quality. A "
    "score of 5 signifies that the translation is of comparable quality to the reference "
    "translation, while a score of 6 indicates that the translation surpasses the quality of "
    "the reference translation.";

// Few-shot layouts. The example blocks are expanded by build_fewshot.
constexpr std::string_view kFewshotGpt35Block = "English Poem:{{source}}\nModern Chinese Poem:{{target}}";
constexpr std::string_view kFewshotGpt4Block = "Poem:{{source}}\nChinese Translation:{{target}}";

std::string instruction_with_poem(std::string_view instruction) {
  return std::string(instruction) + "\n{{poem}}";
}

std::string judge_text(std::size_t count) {
  static constexpr std::array<std::string_view, 6> kWords = {"zero", "one", "two",
                                                             "three", "four", "five"};
  std::string intro(kJudgeIntro);
  intro.replace(intro.find("{COUNT}"), 7, kWords[count]);
  std::string text = intro;
  text += "\nEach criterion is defined as follows:\n{{criteria}}";
  text += "\nSource Language Poem: {{source}}";
  text += "\nReference translation: {{reference}}";
  for (std::size_t i = 1; i <= count; ++i) {
    text += "\nCandidate translation " + std::to_string(i) + ": {{candidate_" +
            std::to_string(i) + "}}";
  }
  text += "\nThe scores of different candidate translations under various criteria:";
  return text;
}

std::string raw_text(TemplateId id) {
  switch (id) {
    case TemplateId::kH1: return instruction_with_poem(kH1);
    case TemplateId::kH2: return instruction_with_poem(kH2);
    case TemplateId::kH3: return instruction_with_poem(kH3);
    case TemplateId::kP1: return instruction_with_poem(kP1);
    case TemplateId::kP2: return instruction_with_poem(kP2);
    case TemplateId::kP3: return instruction_with_poem(kP3);
    case TemplateId::kP4: return instruction_with_poem(kP4);
    case TemplateId::kP5: return instruction_with_poem(kP5);
    case TemplateId::kFewshotGpt35:
      return std::string(kH3) + "\nExample(s):\n{{examples}}\nEnglish Poem:{{poem}}\nModern Chinese Poem:";
    case TemplateId::kFewshotGpt4:
      return std::string(kH2) + "\nExample(s):\n{{examples}}\nPoem:{{poem}}\nChinese Translation:";
    case TemplateId::kEapmtStep1Gpt35:
      return "Please provide an explanation for this English poem:\nEnglish poem:{{poem}}\nExplanation:";
    case TemplateId::kEapmtStep2Gpt35:
      return "Please translate this English poem into a modern Chinese poem based on its "
             "explanation:\nExplanation:{{explanation}}\nEnglish poem:{{poem}}\nModern Chinese poem:";
    case TemplateId::kEapmtStep1Gpt4:
      return "Please provide an explanation for this poem:\nPoem:{{poem}}\nExplanation:";
    case TemplateId::kEapmtStep2Gpt4:
      return "Please provide the Chinese translation for this poem based on its "
             "explanation:\nExplanation:{{explanation}}\nPoem:{{poem}}\nChinese translation:";
    case TemplateId::kContinuation:
      return "Please continue writing the next {{n_remaining}} lines of the modern poem entitled "
             "\"{{title}}\", which requires a total of {{total}} lines:\n{{prefix}}";
    case TemplateId::kContinuationZh:
      return "请续写题为“{{title}}”的现代诗接下来的{{n_remaining}}行，这首诗共有{{total}}行：\n{{prefix}}";
    case TemplateId::kJudge: return judge_text(5);
    case TemplateId::kPoeticPickEn:
      return "Please identify the single most poetic line in this poem. Answer with the line "
             "verbatim.\n{{poem}}";
    case TemplateId::kPoeticPickZh:
      return "请找出这首诗中最有诗意的一行，并原样给出这一行。\n{{poem}}";
  }
  throw Error(ErrorCode::kInternal, "unhandled template id");
}

PromptTemplate make_template(TemplateId id, std::string text) {
  PromptTemplate t{id, std::move(text), {}};
  for (auto& name : scan_placeholders(t.text)) t.placeholders.insert(std::move(name));
  return t;
}

const std::unordered_map<TemplateId, PromptTemplate>& registry() {
  static const std::unordered_map<TemplateId, PromptTemplate> reg = [] {
    std::unordered_map<TemplateId, PromptTemplate> m;
    for (const auto& e : kEntries) m.emplace(e.id, make_template(e.id, raw_text(e.id)));
    return m;
  }();
  return reg;
}

const Entry& entry(TemplateId id) {
  for (const auto& e : kEntries) {
    if (e.id == id) return e;
  }
  throw Error(ErrorCode::kInternal, "unregistered template id");
}

}  // namespace

std::string_view template_name(TemplateId id) { return entry(id).name; }

TemplateId parse_template_id(std::string_view name) {
  for (const auto& e : kEntries) {
    if (e.name == name) return e.id;
  }
  throw Error(ErrorCode::kNotFound, "unknown template id '" + std::string(name) + "'");
}

const std::vector<TemplateId>& all_template_ids() {
  static const std::vector<TemplateId> ids = [] {
    std::vector<TemplateId> v;
    for (const auto& e : kEntries) v.push_back(e.id);
    return v;
  }();
  return ids;
}

bool is_transcribed(TemplateId id) { return entry(id).transcribed; }

std::vector<std::string> scan_placeholders(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    std::size_t end = text.find("}}", pos + 2);
    if (end == std::string_view::npos) break;
    std::string_view name = text.substr(pos + 2, end - pos - 2);
    bool ident = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    });
    if (ident) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.emplace_back(name);
      pos = end + 2;
    } else {
      pos += 2;
    }
  }
  return names;
}

const PromptTemplate& get_template(TemplateId id) { return registry().at(id); }

PromptTemplate judge_template(std::size_t count) {
  if (count < 2 || count > 5) {
    throw Error(ErrorCode::kInvalidArgument,
                "judge template supports 2..5 candidates, got " + std::to_string(count));
  }
  return make_template(TemplateId::kJudge, judge_text(count));
}

RenderedPrompt render(const PromptTemplate& tmpl, const Bindings& bindings) {
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (const auto& name : tmpl.placeholders) {
    if (!bindings.contains(name)) missing.push_back(name);
  }
  for (const auto& [name, value] : bindings) {
    if (!tmpl.placeholders.contains(name)) extra.push_back(name);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "bindings for " + std::string(template_name(tmpl.id)) + " do not match:";
    if (!missing.empty()) msg += " missing [" + unicode::join(missing, ", ") + "]";
    if (!extra.empty()) msg += " unexpected [" + unicode::join(extra, ", ") + "]";
    throw Error(ErrorCode::kInvalidArgument, msg);
  }
  // Single left-to-right pass; substituted values are never rescanned.
  std::string out;
  std::string_view text = tmpl.text;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    std::string_view name = text.substr(open + 2, close - open - 2);
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      out.append(text.substr(pos, open + 2 - pos));
      pos = open + 2;
      continue;
    }
    out.append(text.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  return RenderedPrompt{tmpl.id, std::move(out), bindings};
}

std::string format_lines(const std::vector<std::string>& lines) {
  return unicode::join(lines, "\n");
}

std::string format_poem(const Poem& poem) {
  std::string body = format_lines(poem.lines);
  if (poem.title.empty()) return body;
  return poem.title + "\n" + body;
}

RenderedPrompt build_fewshot(TemplateId id, std::span<const PoemPair> examples,
                             const Poem& source) {
  if (id != TemplateId::kFewshotGpt35 && id != TemplateId::kFewshotGpt4) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(template_name(id)) + " is not a few-shot template");
  }
  const std::size_t k = examples.size();
  if (k != 0 && k != 1 && k != 3 && k != 5) {
    throw Error(ErrorCode::kInvalidArgument,
                "shot count must be 0, 1, 3 or 5, got " + std::to_string(k));
  }
  for (const auto& ex : examples) {
    if (ex.source.id == source.id || (ex.source.lines == source.lines && ex.source.title == source.title)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "few-shot example '" + ex.pair_id + "' is the source poem itself");
    }
  }
  const bool gpt35 = id == TemplateId::kFewshotGpt35;
  Bindings bindings{{"poem", format_poem(source)}};
  if (k == 0) {
    std::string text = gpt35 ? std::string(kH3) + "\nEnglish Poem:{{poem}}\nModern Chinese Poem:"
                             : std::string(kH2) + "\nPoem:{{poem}}\nChinese Translation:";
    RenderedPrompt r = render(make_template(id, std::move(text)), bindings);
    return r;
  }
  const PromptTemplate block = make_template(id, std::string(gpt35 ? kFewshotGpt35Block : kFewshotGpt4Block));
  std::vector<std::string> blocks;
  for (const auto& ex : examples) {
    blocks.push_back(render(block, {{"source", format_poem(ex.source)},
                                    {"target", format_poem(ex.reference)}})
                         .final_text);
  }
  bindings["examples"] = unicode::join(blocks, "\n");
  return render(get_template(id), bindings);
}

void export_templates(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (TemplateId id : all_template_ids()) {
    detail::write_file_atomic(dir / (std::string(template_name(id)) + ".txt"),
                              get_template(id).text + "\n");
  }
}

}  // namespace eapmt
