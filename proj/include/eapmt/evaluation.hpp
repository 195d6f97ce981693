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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eapmt/corpus.hpp"
#include "eapmt/error.hpp"
#include "eapmt/llm_client.hpp"
#include "eapmt/translate.hpp"

namespace eapmt {

enum class Criterion { kOI, kSim, kFide, kLine, kMean, kPoet, kAcc, kErro };

inline constexpr std::size_t kCriterionCount = 8;

const std::array<Criterion, kCriterionCount>& all_criteria();
std::string_view criterion_abbrev(Criterion c);  // "OI", "Sim", ...
std::string_view criterion_name(Criterion c);    // "Overall Impression", ...
// "Overall Impression (OI): This criterion evaluates ..."
std::string_view criterion_definition(Criterion c);
Criterion parse_criterion(std::string_view abbrev);
// All definitions, one per line; fills the judge rubric's {{criteria}} slot.
std::string criteria_block();

inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 6;

struct ScoreSheet {
  std::string judge_id;
  std::string pair_id;
  std::string candidate_id;  // blinded label
  std::map<Criterion, int> scores;

  // Throws Error(kSchema) listing missing criteria or out-of-range scores.
  void validate() const;
  bool operator==(const ScoreSheet&) const = default;
};

struct Ballot {
  std::string judge_id;
  std::string pair_id;
  std::string candidate_id;
};

class BlindingKey {
 public:
  BlindingKey() = default;
  explicit BlindingKey(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  // Throws kInvalidArgument if the label or the system is already used for this pair.
  void assign(const std::string& pair_id, const std::string& label, const std::string& system);
  // Throws kNotFound for an unknown (pair, label).
  const std::string& system_for(std::string_view pair_id, std::string_view label) const;
  bool contains(std::string_view pair_id, std::string_view label) const;
  // Labels of one pair in label order.
  std::vector<std::string> labels(std::string_view pair_id) const;
  // Distinct systems in first-assignment order.
  const std::vector<std::string>& systems() const { return systems_; }
  std::vector<std::string> pair_ids() const;

  void merge(const BlindingKey& other);

  std::string to_json() const;
  static BlindingKey from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static BlindingKey load(const std::filesystem::path& path);

  bool operator==(const BlindingKey&) const = default;

 private:
  std::uint64_t seed_ = 0;
  std::map<std::pair<std::string, std::string>, std::string> entries_;
  std::vector<std::string> systems_;
};

enum class QuestionnaireMode { kVote, kScore };

std::string_view questionnaire_mode_name(QuestionnaireMode mode);
QuestionnaireMode parse_questionnaire_mode(std::string_view name);

struct Questionnaire {
  std::string judge_id;
  std::string markdown;
  std::string answer_csv;  // blank answer sheet
};

struct QuestionnaireSet {
  std::vector<Questionnaire> questionnaires;
  BlindingKey key;
};

// `candidates` maps a system label to its records; every system needs one
// record per pair. The reference translation is shown in score mode only.
QuestionnaireSet make_questionnaire(
    const std::vector<PoemPair>& pairs,
    const std::map<std::string, std::vector<TranslationRecord>>& candidates, std::uint64_t seed,
    QuestionnaireMode mode, const std::vector<std::string>& judge_ids);

// Writes <dir>/<judge>.md and <dir>/<judge>.csv.
void write_questionnaires(const QuestionnaireSet& set, const std::filesystem::path& dir);

// Answer sheets: judge_id,pair_id,candidate_id[,OI,...,Erro].
std::vector<Ballot> parse_ballots_csv(std::string_view text);
std::vector<ScoreSheet> parse_score_sheets_csv(std::string_view text);
std::string score_sheets_csv(const std::vector<ScoreSheet>& sheets);

struct LabeledBallot {
  std::string judge_id;
  std::string pair_id;
  std::string system;
};

struct LabeledSheet {
  std::string judge_id;
  std::string pair_id;
  std::string system;
  std::map<Criterion, int> scores;
};

std::vector<LabeledBallot> deblind(const std::vector<Ballot>& ballots, const BlindingKey& key);
std::vector<LabeledSheet> deblind(const std::vector<ScoreSheet>& sheets, const BlindingKey& key);

struct VoteCounts {
  std::vector<std::string> systems;  // column order
  std::map<std::string, int> counts;
  int judges = 0;
  int poems = 0;
  int total = 0;

  int count(std::string_view system) const;
};

// Throws kSchema on a duplicate (judge, poem) ballot or a judge missing a poem.
VoteCounts count_votes(const std::vector<LabeledBallot>& ballots,
                       const std::vector<std::string>& systems);
// Unknown blinded ids throw kSchema.
VoteCounts aggregate_votes(const std::vector<Ballot>& ballots, const BlindingKey& key);

struct VoteTable {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, VoteCounts>> rows;

  std::string to_csv() const;
  std::string to_markdown() const;
};

struct ScoreTable {
  std::vector<std::string> systems;
  // Means in hundredths, rounded half-up.
  std::map<std::string, std::array<std::int64_t, kCriterionCount>> hundredths;
  std::map<std::string, std::size_t> sheet_counts;

  double mean(std::string_view system, Criterion c) const;
  std::string formatted(std::string_view system, Criterion c) const;  // "4.00"
  std::string to_csv() const;
  std::string to_markdown() const;
};

// Half-up rounding of sum / count to hundredths, exact in integers.
std::int64_t mean_hundredths(std::int64_t sum, std::int64_t count);

ScoreTable mean_scores(const std::vector<LabeledSheet>& sheets,
                       const std::vector<std::string>& systems);
// Throws kSchema on incomplete sheets or a repeated (judge, poem, candidate).
ScoreTable aggregate_scores(const std::vector<ScoreSheet>& sheets, const BlindingKey& key);

struct SixCountTable {
  std::vector<std::string> systems;
  std::map<std::string, std::array<int, kCriterionCount>> counts;

  int count(std::string_view system, Criterion c) const;
  std::string to_csv() const;
  // Columns default to every criterion.
  std::string to_markdown(const std::vector<Criterion>& columns = {}) const;
};

SixCountTable count_six(const std::vector<ScoreSheet>& sheets, const BlindingKey& key);

// Parsed judge reply: candidate number -> criterion -> score.
using JudgeBlock = std::map<int, std::map<Criterion, int>>;

class JudgeParseError : public Error {
 public:
  JudgeParseError(const std::string& message, std::string raw)
      : Error(ErrorCode::kJudgeParse, message), raw_(std::move(raw)) {}
  const std::string& raw_text() const { return raw_; }

 private:
  std::string raw_;
};

// The sentence appended to the judge rubric requesting fenced JSON.
std::string_view judge_output_instruction();

// Reads a fenced JSON object, falling back to "Candidate N: OI: x, Sim: y, ..."
// lines. Throws JudgeParseError on unparseable text, out-of-range scores,
// missing criteria, or a candidate count other than `expected`.
JudgeBlock parse_judge_reply(std::string_view text, std::size_t expected);
// Canonical fenced JSON form of a block.
std::string serialize_judge_block(const JudgeBlock& block);

struct JudgeCandidate {
  std::string system;
  std::string text;
};

struct JudgeResult {
  std::vector<ScoreSheet> sheets;  // candidate_id is the rubric number "1".."N"
  BlindingKey key;
  std::string prompt;
  std::string raw_response;
};

// Candidates are shuffled with `seed` before numbering.
JudgeResult llm_judge(LlmClient& client, const PoemPair& pair,
                      const std::vector<JudgeCandidate>& candidates, const ModelSpec& model,
                      std::uint64_t seed);

// Default system label of a record, e.g. "gpt-4/H2/0-shot" or "EAPMT/gpt-4".
std::string record_system_label(const TranslationRecord& record);

// Asks the model for the most poetic line, using the language-specific prompt.
std::string pick_most_poetic(LlmClient& client, const Poem& poem, const ModelSpec& model);

struct ConsistencyResult {
  int matches = 0;
  int resolved = 0;
  std::vector<std::string> unresolved;  // pair ids with tied votes
  std::vector<std::string> warnings;
};

// Human consensus is the plurality line; ties are excluded. Lines compare
// after whitespace normalization.
ConsistencyResult poetic_consistency(
    const std::map<std::string, Poem>& poems, const std::map<std::string, std::string>& model_picks,
    const std::map<std::pair<std::string, std::string>, std::string>& human_ballots);

struct ConsistencyTable {
  std::vector<std::string> columns;  // e.g. English, Chinese
  std::vector<std::pair<std::string, std::vector<int>>> rows;

  std::string to_csv() const;
  std::string to_markdown() const;
};

}  // namespace eapmt
