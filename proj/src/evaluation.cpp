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

#include "eapmt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>
#include <set>
#include <tuple>

#include "detail.hpp"
#include "eapmt/csv.hpp"
#include "eapmt/prompts.hpp"
#include "eapmt/unicode.hpp"

namespace eapmt {

using detail::json;

namespace {

struct CriterionInfo {
  Criterion id;
  std::string_view abbrev;
  std::string_view name;
  std::string_view definition;
};

constexpr std::array<CriterionInfo, kCriterionCount> kCriteria = {{
    {Criterion::kOI, "OI", "Overall Impression",
     "Overall Impression (OI): This criterion evaluates the general impact of the candidate "
     "translation as compared to the source poem or reference translation. It assesses whether "
     "the translation successfully captures the essence and tone of the original."},
    {Criterion::kSim, "Sim", "Similarity",
     "Similarity (Sim): Measures the degree of similarity between the candidate translation and "
     "the reference translation, focusing on stylistic and thematic alignment."},
    {Criterion::kFide, "Fide", "Fidelity",
     "Fidelity (Fide): Assesses how faithfully the translation conveys the original poem's "
     "intent, emotions, and deeper meanings, thus evaluating whether the translation transcends "
     "mere linguistic equivalence to preserve the poem's core essence."},
    {Criterion::kLine, "Line", "Line-breaking",
     "Line-breaking (Line): Evaluates the appropriateness of line breaks in the translation in "
     "comparison to the source poem or reference translation, considering how these contribute "
     "to the poem's rhythm and tension."},
    {Criterion::kMean, "Mean", "Meaningfulness",
     "Meaningfulness (Mean): Examines the extent to which the translation conveys the original "
     "poem's meanings, exploring both surface-level content and deeper interpretative layers."},
    {Criterion::kPoet, "Poet", "Poeticity",
     "Poeticity (Poet): Assesses how well the poetic qualities of the original text, such as "
     "imagery, metaphor, and overall poetic effect, are preserved in the translation."},
    {Criterion::kAcc, "Acc", "Accuracy",
     "Accuracy (Acc): Focuses on the precision of translated elements, including words and word "
     "combinations, crucial to maintaining the integrity of the poem."},
    {Criterion::kErro, "Erro", "Errors",
     "Errors (Erro): Identifies and categorizes errors in the translation, with a detailed "
     "scoring system that ranges from minor, ignorable mistakes to significant errors that alter "
     "the poem's meaning."},
}};

const CriterionInfo& info(Criterion c) { return kCriteria[static_cast<std::size_t>(c)]; }

constexpr std::string_view kJudgeOutputInstruction =
    "Report the scores as a JSON object inside a ```json fenced block that maps each candidate "
    "number to its eight scores keyed OI, Sim, Fide, Line, Mean, Poet, Acc, Erro, for example "
    "{\"1\": {\"OI\": 4, \"Sim\": 4, \"Fide\": 4, \"Line\": 4, \"Mean\": 4, \"Poet\": 4, "
    "\"Acc\": 4, \"Erro\": 4}}.";

constexpr std::string_view kKeyWarning =
    "Blinding key. Do not share this file with judges.";

std::string blind_label(std::size_t index) {
  if (index >= 26) throw Error(ErrorCode::kInvalidArgument, "at most 26 candidates per poem");
  return std::string(1, static_cast<char>('A' + index));
}

std::string field(const std::vector<std::string>& row, std::size_t i) {
  return i < row.size() ? unicode::trim(row[i]) : std::string();
}

bool blank_row(const std::vector<std::string>& row) {
  return std::all_of(row.begin(), row.end(),
                     [](const std::string& f) { return unicode::trim(f).empty(); });
}

std::vector<std::string> ballot_header() { return {"judge_id", "pair_id", "candidate_id"}; }

std::vector<std::string> sheet_header() {
  std::vector<std::string> h = ballot_header();
  for (Criterion c : all_criteria()) h.emplace_back(criterion_abbrev(c));
  return h;
}

void check_header(const std::vector<std::vector<std::string>>& rows,
                  const std::vector<std::string>& expected) {
  if (rows.empty()) throw Error(ErrorCode::kSchema, "answer sheet is empty");
  std::vector<std::string> got;
  for (const auto& f : rows.front()) got.push_back(unicode::trim(f));
  if (got != expected) {
    throw Error(ErrorCode::kSchema,
                "answer sheet header must be '" + unicode::join(expected, ",") + "'");
  }
}

std::string markdown_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) out += " " + c + " |";
  return out + "\n";
}

std::string markdown_rule(std::size_t columns) {
  std::string out = "|";
  for (std::size_t i = 0; i < columns; ++i) out += "---|";
  return out + "\n";
}

std::uint64_t pair_seed(std::uint64_t seed, std::string_view pair_id) {
  return seed ^ std::stoull(detail::sha256_hex(pair_id).substr(0, 16), nullptr, 16);
}

bool is_small_uint(std::string_view s) {
  return !s.empty() && s.size() < 4 &&
         std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
}

// Accepts "1", "Candidate 1", "candidate_1".
std::optional<int> candidate_number(std::string_view key) {
  std::string digits;
  for (char ch : key) {
    if (ch >= '0' && ch <= '9') digits += ch;
  }
  if (digits.empty() || digits.size() > 3) return std::nullopt;
  return std::stoi(digits);
}

std::optional<Criterion> criterion_from_key(std::string_view key) {
  std::string k = unicode::trim(key);
  for (const auto& ci : kCriteria) {
    std::string lower_abbrev = unicode::to_lower(ci.abbrev);
    std::string lower_name = unicode::to_lower(ci.name);
    std::string lower_key = unicode::to_lower(k);
    if (lower_key == lower_abbrev || lower_key == lower_name) return ci.id;
  }
  return std::nullopt;
}

std::optional<JudgeBlock> parse_fenced(std::string_view text, const std::string& raw) {
  static const std::regex kFence(R"(```[A-Za-z]*[ \t]*\r?\n([\s\S]*?)```)");
  std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kFence); it != std::sregex_iterator();
       ++it) {
    json j = json::parse((*it)[1].str(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    JudgeBlock block;
    for (const auto& [key, scores] : j.items()) {
      auto n = candidate_number(key);
      if (!n) throw JudgeParseError("unrecognized candidate key '" + key + "'", raw);
      if (!scores.is_object()) {
        throw JudgeParseError("scores for candidate " + key + " are not an object", raw);
      }
      auto& sheet = block[*n];
      for (const auto& [ckey, value] : scores.items()) {
        auto c = criterion_from_key(ckey);
        if (!c) throw JudgeParseError("unknown criterion '" + ckey + "'", raw);
        int v = 0;
        if (value.is_number_integer()) {
          v = value.get<int>();
        } else if (value.is_number_float() && value.get<double>() == std::floor(value.get<double>())) {
          v = static_cast<int>(value.get<double>());
        } else if (value.is_string() && is_small_uint(value.get<std::string>())) {
          v = std::stoi(value.get<std::string>());
        } else {
          throw JudgeParseError("score for candidate " + key + " " + ckey + " is not an integer",
                                raw);
        }
        sheet[*c] = v;
      }
    }
    return block;
  }
  return std::nullopt;
}

JudgeBlock parse_lines(std::string_view text) {
  static const std::regex kCandidate(R"(^[\s*#>-]*candidate(?:\s+translation)?\s*(\d+)(.*)$)",
                                     std::regex::icase);
  static const std::regex kScore(R"((OI|Sim|Fide|Line|Mean|Poet|Acc|Erro)\**\s*[:=]\s*\**\s*(\d+))");
  JudgeBlock block;
  for (const auto& line : unicode::split_lines(text)) {
    std::smatch m;
    if (!std::regex_match(line, m, kCandidate)) continue;
    int n = std::stoi(m[1].str());
    std::string rest = m[2].str();
    for (auto it = std::sregex_iterator(rest.begin(), rest.end(), kScore);
         it != std::sregex_iterator(); ++it) {
      block[n][parse_criterion((*it)[1].str())] = std::stoi((*it)[2].str());
    }
  }
  return block;
}

}  // namespace

const std::array<Criterion, kCriterionCount>& all_criteria() {
  static const std::array<Criterion, kCriterionCount> kAll = {
      Criterion::kOI,   Criterion::kSim,  Criterion::kFide, Criterion::kLine,
      Criterion::kMean, Criterion::kPoet, Criterion::kAcc,  Criterion::kErro};
  return kAll;
}

std::string_view criterion_abbrev(Criterion c) { return info(c).abbrev; }
std::string_view criterion_name(Criterion c) { return info(c).name; }
std::string_view criterion_definition(Criterion c) { return info(c).definition; }

Criterion parse_criterion(std::string_view abbrev) {
  for (const auto& ci : kCriteria) {
    if (ci.abbrev == abbrev) return ci.id;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown criterion '" + std::string(abbrev) + "'");
}

std::string criteria_block() {
  std::vector<std::string> lines;
  for (const auto& ci : kCriteria) lines.emplace_back(ci.definition);
  return unicode::join(lines, "\n");
}

void ScoreSheet::validate() const {
  std::vector<std::string> missing;
  for (Criterion c : all_criteria()) {
    auto it = scores.find(c);
    if (it == scores.end()) {
      missing.emplace_back(criterion_abbrev(c));
    } else if (it->second < kMinScore || it->second > kMaxScore) {
      throw Error(ErrorCode::kSchema, "score " + std::to_string(it->second) + " for " +
                                          std::string(criterion_abbrev(c)) + " by " + judge_id +
                                          " on " + pair_id + "/" + candidate_id +
                                          " is outside 1..6");
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kSchema, "sheet of " + judge_id + " for " + pair_id + "/" +
                                        candidate_id + " is missing " +
                                        unicode::join(missing, ", "));
  }
}

// BlindingKey

void BlindingKey::assign(const std::string& pair_id, const std::string& label,
                         const std::string& system) {
  auto k = std::make_pair(pair_id, label);
  auto existing = entries_.find(k);
  if (existing != entries_.end()) {
    if (existing->second == system) return;
    throw Error(ErrorCode::kInvalidArgument,
                "label " + label + " of pair " + pair_id + " is already assigned");
  }
  for (const auto& [key, sys] : entries_) {
    if (key.first == pair_id && sys == system) {
      throw Error(ErrorCode::kInvalidArgument,
                  "system " + system + " already has a label for pair " + pair_id);
    }
  }
  entries_.emplace(std::move(k), system);
  if (std::find(systems_.begin(), systems_.end(), system) == systems_.end()) {
    systems_.push_back(system);
  }
}

const std::string& BlindingKey::system_for(std::string_view pair_id, std::string_view label) const {
  auto it = entries_.find({std::string(pair_id), std::string(label)});
  if (it == entries_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown candidate '" + std::string(label) + "' for pair '" +
                                          std::string(pair_id) + "'");
  }
  return it->second;
}

bool BlindingKey::contains(std::string_view pair_id, std::string_view label) const {
  return entries_.count({std::string(pair_id), std::string(label)}) > 0;
}

std::vector<std::string> BlindingKey::labels(std::string_view pair_id) const {
  std::vector<std::string> out;
  for (const auto& [key, sys] : entries_) {
    if (key.first == pair_id) out.push_back(key.second);
  }
  return out;
}

std::vector<std::string> BlindingKey::pair_ids() const {
  std::vector<std::string> out;
  for (const auto& [key, sys] : entries_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  return out;
}

void BlindingKey::merge(const BlindingKey& other) {
  for (const auto& sys : other.systems_) {
    if (std::find(systems_.begin(), systems_.end(), sys) == systems_.end()) systems_.push_back(sys);
  }
  for (const auto& [key, sys] : other.entries_) assign(key.first, key.second, sys);
}

std::string BlindingKey::to_json() const {
  json j;
  j["warning"] = kKeyWarning;
  j["seed"] = seed_;
  j["systems"] = systems_;
  json entries = json::array();
  for (const auto& [key, sys] : entries_) {
    entries.push_back({{"pair_id", key.first}, {"label", key.second}, {"system", sys}});
  }
  j["entries"] = std::move(entries);
  return j.dump(2) + "\n";
}

BlindingKey BlindingKey::from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kParse, "blinding key is not JSON");
  try {
    BlindingKey key(j.at("seed").get<std::uint64_t>());
    key.systems_ = j.at("systems").get<std::vector<std::string>>();
    for (const auto& e : j.at("entries")) {
      key.assign(e.at("pair_id").get<std::string>(), e.at("label").get<std::string>(),
                 e.at("system").get<std::string>());
    }
    return key;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("malformed blinding key: ") + e.what());
  }
}

void BlindingKey::save(const std::filesystem::path& path) const {
  detail::write_file_atomic(path, to_json());
}

BlindingKey BlindingKey::load(const std::filesystem::path& path) {
  return from_json(detail::read_file(path));
}

// Questionnaires

std::string_view questionnaire_mode_name(QuestionnaireMode mode) {
  return mode == QuestionnaireMode::kVote ? "vote" : "score";
}

QuestionnaireMode parse_questionnaire_mode(std::string_view name) {
  if (name == "vote") return QuestionnaireMode::kVote;
  if (name == "score") return QuestionnaireMode::kScore;
  throw Error(ErrorCode::kInvalidArgument, "unknown questionnaire mode '" + std::string(name) + "'");
}

QuestionnaireSet make_questionnaire(
    const std::vector<PoemPair>& pairs,
    const std::map<std::string, std::vector<TranslationRecord>>& candidates, std::uint64_t seed,
    QuestionnaireMode mode, const std::vector<std::string>& judge_ids) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no poems for the questionnaire");
  if (candidates.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a questionnaire needs at least 2 systems");
  }
  if (judge_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "no judges given");
  if (std::set<std::string>(judge_ids.begin(), judge_ids.end()).size() != judge_ids.size()) {
    throw Error(ErrorCode::kInvalidArgument, "judge ids must be distinct");
  }

  struct Block {
    const PoemPair* pair;
    std::vector<std::pair<std::string, std::string>> shown;  // label, text
  };
  std::vector<Block> blocks;
  QuestionnaireSet set;
  set.key = BlindingKey(seed);
  std::mt19937_64 rng(seed);

  for (const auto& pair : pairs) {
    std::vector<std::pair<std::string, const TranslationRecord*>> found;
    for (const auto& [system, records] : candidates) {
      const TranslationRecord* hit = nullptr;
      for (const auto& r : records) {
        if (r.pair_id != pair.pair_id) continue;
        if (hit) {
          throw Error(ErrorCode::kInvalidArgument,
                      "system '" + system + "' has two candidates for pair '" + pair.pair_id + "'");
        }
        hit = &r;
      }
      if (!hit) {
        throw Error(ErrorCode::kNotFound, "missing candidate for (system '" + system +
                                              "', pair '" + pair.pair_id + "')");
      }
      found.emplace_back(system, hit);
    }
    detail::seeded_shuffle(found, rng);
    Block block{&pair, {}};
    for (std::size_t i = 0; i < found.size(); ++i) {
      std::string label = blind_label(i);
      set.key.assign(pair.pair_id, label, found[i].first);
      block.shown.emplace_back(label, found[i].second->text());
    }
    blocks.push_back(std::move(block));
  }

  const bool score = mode == QuestionnaireMode::kScore;
  for (const auto& judge : judge_ids) {
    Questionnaire q;
    q.judge_id = judge;
    std::string& md = q.markdown;
    md += "# Translation questionnaire\n\n";
    md += "Judge: " + judge + "\n\n";
    if (score) {
      md += "Rate every candidate on each criterion with an integer from 1 to 6. A 5 means equal "
            "in quality to the reference translation and a 6 means better than it. Enter the "
            "scores in the answer sheet.\n\n";
      md += "## Criteria\n\n";
      for (Criterion c : all_criteria()) md += "- " + std::string(criterion_definition(c)) + "\n";
      md += "\n";
    } else {
      md += "For each poem, choose the one candidate translation you consider best and enter its "
            "label in the answer sheet.\n\n";
    }
    for (std::size_t p = 0; p < blocks.size(); ++p) {
      const auto& b = blocks[p];
      md += "## Poem " + std::to_string(p + 1) + " (" + b.pair->pair_id + ")\n\n";
      md += "### Source poem\n\n```text\n" + format_poem(b.pair->source) + "\n```\n\n";
      if (score) {
        md += "### Reference translation\n\n```text\n" + format_poem(b.pair->reference) +
              "\n```\n\n";
      }
      for (const auto& [label, text] : b.shown) {
        md += "### Candidate " + label + "\n\n```text\n" + text + "\n```\n\n";
      }
    }

    q.answer_csv = csv::row(score ? sheet_header() : ballot_header());
    for (const auto& b : blocks) {
      if (score) {
        for (const auto& [label, text] : b.shown) {
          std::vector<std::string> row = {judge, b.pair->pair_id, label};
          row.resize(3 + kCriterionCount);
          q.answer_csv += csv::row(row);
        }
      } else {
        q.answer_csv += csv::row({judge, b.pair->pair_id, ""});
      }
    }
    set.questionnaires.push_back(std::move(q));
  }
  return set;
}

void write_questionnaires(const QuestionnaireSet& set, const std::filesystem::path& dir) {
  for (const auto& q : set.questionnaires) {
    detail::write_file_atomic(dir / (q.judge_id + ".md"), q.markdown);
    detail::write_file_atomic(dir / (q.judge_id + ".csv"), q.answer_csv);
  }
}

std::vector<Ballot> parse_ballots_csv(std::string_view text) {
  auto rows = csv::parse(text);
  check_header(rows, ballot_header());
  std::vector<Ballot> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (blank_row(rows[i])) continue;
    Ballot b{field(rows[i], 0), field(rows[i], 1), field(rows[i], 2)};
    if (b.judge_id.empty() || b.pair_id.empty() || b.candidate_id.empty()) {
      throw Error(ErrorCode::kSchema, "answer sheet row " + std::to_string(i + 1) +
                                          " has an empty field");
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<ScoreSheet> parse_score_sheets_csv(std::string_view text) {
  auto rows = csv::parse(text);
  const auto header = sheet_header();
  check_header(rows, header);
  std::vector<ScoreSheet> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (blank_row(rows[i])) continue;
    ScoreSheet s{field(rows[i], 0), field(rows[i], 1), field(rows[i], 2), {}};
    if (s.judge_id.empty() || s.pair_id.empty() || s.candidate_id.empty()) {
      throw Error(ErrorCode::kSchema, "answer sheet row " + std::to_string(i + 1) +
                                          " has an empty id field");
    }
    for (std::size_t c = 0; c < kCriterionCount; ++c) {
      std::string v = field(rows[i], 3 + c);
      if (v.empty()) continue;
      if (!is_small_uint(v)) {
        throw Error(ErrorCode::kParse, "answer sheet row " + std::to_string(i + 1) + " column " +
                                           header[3 + c] + ": '" + v + "' is not an integer");
      }
      s.scores[all_criteria()[c]] = std::stoi(v);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string score_sheets_csv(const std::vector<ScoreSheet>& sheets) {
  std::string out = csv::row(sheet_header());
  for (const auto& s : sheets) {
    std::vector<std::string> row = {s.judge_id, s.pair_id, s.candidate_id};
    for (Criterion c : all_criteria()) {
      auto it = s.scores.find(c);
      row.push_back(it == s.scores.end() ? "" : std::to_string(it->second));
    }
    out += csv::row(row);
  }
  return out;
}

std::vector<LabeledBallot> deblind(const std::vector<Ballot>& ballots, const BlindingKey& key) {
  std::vector<LabeledBallot> out;
  out.reserve(ballots.size());
  for (const auto& b : ballots) {
    if (!key.contains(b.pair_id, b.candidate_id)) {
      throw Error(ErrorCode::kSchema, "ballot of " + b.judge_id + " names unknown candidate '" +
                                          b.candidate_id + "' for pair '" + b.pair_id + "'");
    }
    out.push_back({b.judge_id, b.pair_id, key.system_for(b.pair_id, b.candidate_id)});
  }
  return out;
}

std::vector<LabeledSheet> deblind(const std::vector<ScoreSheet>& sheets, const BlindingKey& key) {
  std::vector<LabeledSheet> out;
  out.reserve(sheets.size());
  for (const auto& s : sheets) {
    if (!key.contains(s.pair_id, s.candidate_id)) {
      throw Error(ErrorCode::kSchema, "sheet of " + s.judge_id + " names unknown candidate '" +
                                          s.candidate_id + "' for pair '" + s.pair_id + "'");
    }
    out.push_back({s.judge_id, s.pair_id, key.system_for(s.pair_id, s.candidate_id), s.scores});
  }
  return out;
}

// Votes

int VoteCounts::count(std::string_view system) const {
  auto it = counts.find(std::string(system));
  return it == counts.end() ? 0 : it->second;
}

VoteCounts count_votes(const std::vector<LabeledBallot>& ballots,
                       const std::vector<std::string>& systems) {
  if (ballots.empty()) throw Error(ErrorCode::kInvalidArgument, "no ballots");
  VoteCounts out;
  out.systems = systems;
  for (const auto& s : systems) out.counts[s] = 0;
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> judges;
  std::set<std::string> poems;
  for (const auto& b : ballots) {
    if (!seen.emplace(b.judge_id, b.pair_id).second) {
      throw Error(ErrorCode::kSchema,
                  "duplicate ballot by judge " + b.judge_id + " for poem " + b.pair_id);
    }
    auto it = out.counts.find(b.system);
    if (it == out.counts.end()) {
      throw Error(ErrorCode::kSchema, "ballot for unknown system '" + b.system + "'");
    }
    ++it->second;
    judges.insert(b.judge_id);
    poems.insert(b.pair_id);
  }
  for (const auto& j : judges) {
    for (const auto& p : poems) {
      if (!seen.count({j, p})) {
        throw Error(ErrorCode::kSchema, "judge " + j + " has no ballot for poem " + p);
      }
    }
  }
  out.judges = static_cast<int>(judges.size());
  out.poems = static_cast<int>(poems.size());
  out.total = static_cast<int>(ballots.size());
  return out;
}

VoteCounts aggregate_votes(const std::vector<Ballot>& ballots, const BlindingKey& key) {
  VoteCounts out = count_votes(deblind(ballots, key), key.systems());
  std::set<std::string> voted;
  for (const auto& b : ballots) voted.insert(b.pair_id);
  for (const auto& p : key.pair_ids()) {
    if (!voted.count(p)) throw Error(ErrorCode::kSchema, "no ballots for poem " + p);
  }
  return out;
}

std::string VoteTable::to_csv() const {
  std::string out = csv::row({"condition", "system", "votes"});
  for (const auto& [label, counts] : rows) {
    for (const auto& col : columns) out += csv::row({label, col, std::to_string(counts.count(col))});
  }
  return out;
}

std::string VoteTable::to_markdown() const {
  std::vector<std::string> head = {""};
  head.insert(head.end(), columns.begin(), columns.end());
  std::string out = markdown_row(head) + markdown_rule(head.size());
  for (const auto& [label, counts] : rows) {
    std::vector<std::string> cells = {label};
    for (const auto& col : columns) cells.push_back(std::to_string(counts.count(col)));
    out += markdown_row(cells);
  }
  return out;
}

// Scores

std::int64_t mean_hundredths(std::int64_t sum, std::int64_t count) {
  if (count <= 0) throw Error(ErrorCode::kInvalidArgument, "mean of zero values");
  return (200 * sum + count) / (2 * count);
}

ScoreTable mean_scores(const std::vector<LabeledSheet>& sheets,
                       const std::vector<std::string>& systems) {
  if (sheets.empty()) throw Error(ErrorCode::kInvalidArgument, "no score sheets");
  std::map<std::string, std::array<std::int64_t, kCriterionCount>> sums;
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sheets) {
    ScoreSheet{s.judge_id, s.pair_id, s.system, s.scores}.validate();
    if (std::find(systems.begin(), systems.end(), s.system) == systems.end()) {
      throw Error(ErrorCode::kSchema, "sheet for unknown system '" + s.system + "'");
    }
    auto& row = sums.try_emplace(s.system).first->second;
    for (std::size_t c = 0; c < kCriterionCount; ++c) row[c] += s.scores.at(all_criteria()[c]);
    ++counts[s.system];
  }
  ScoreTable t;
  for (const auto& sys : systems) {
    auto it = sums.find(sys);
    if (it == sums.end()) continue;
    t.systems.push_back(sys);
    auto& h = t.hundredths[sys];
    const auto n = static_cast<std::int64_t>(counts[sys]);
    for (std::size_t c = 0; c < kCriterionCount; ++c) h[c] = mean_hundredths(it->second[c], n);
    t.sheet_counts[sys] = counts[sys];
  }
  return t;
}

ScoreTable aggregate_scores(const std::vector<ScoreSheet>& sheets, const BlindingKey& key) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& s : sheets) {
    s.validate();
    if (!seen.emplace(s.judge_id, s.pair_id, s.candidate_id).second) {
      throw Error(ErrorCode::kSchema, "duplicate sheet by " + s.judge_id + " for " + s.pair_id +
                                          "/" + s.candidate_id);
    }
  }
  return mean_scores(deblind(sheets, key), key.systems());
}

double ScoreTable::mean(std::string_view system, Criterion c) const {
  auto it = hundredths.find(std::string(system));
  if (it == hundredths.end()) {
    throw Error(ErrorCode::kNotFound, "no scores for system '" + std::string(system) + "'");
  }
  return static_cast<double>(it->second[static_cast<std::size_t>(c)]) / 100.0;
}

std::string ScoreTable::formatted(std::string_view system, Criterion c) const {
  auto it = hundredths.find(std::string(system));
  if (it == hundredths.end()) {
    throw Error(ErrorCode::kNotFound, "no scores for system '" + std::string(system) + "'");
  }
  const std::int64_t h = it->second[static_cast<std::size_t>(c)];
  std::string frac = std::to_string(h % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(h / 100) + "." + frac;
}

std::string ScoreTable::to_csv() const {
  std::vector<std::string> head = {"system"};
  for (Criterion c : all_criteria()) head.emplace_back(criterion_abbrev(c));
  head.emplace_back("sheets");
  std::string out = csv::row(head);
  for (const auto& sys : systems) {
    std::vector<std::string> row = {sys};
    for (Criterion c : all_criteria()) row.push_back(formatted(sys, c));
    row.push_back(std::to_string(sheet_counts.at(sys)));
    out += csv::row(row);
  }
  return out;
}

std::string ScoreTable::to_markdown() const {
  std::vector<std::string> head = {""};
  for (Criterion c : all_criteria()) head.emplace_back(criterion_abbrev(c));
  std::string out = markdown_row(head) + markdown_rule(head.size());
  for (const auto& sys : systems) {
    std::vector<std::string> row = {sys};
    for (Criterion c : all_criteria()) row.push_back(formatted(sys, c));
    out += markdown_row(row);
  }
  return out;
}

int SixCountTable::count(std::string_view system, Criterion c) const {
  auto it = counts.find(std::string(system));
  return it == counts.end() ? 0 : it->second[static_cast<std::size_t>(c)];
}

SixCountTable count_six(const std::vector<ScoreSheet>& sheets, const BlindingKey& key) {
  // Same preconditions as the means.
  ScoreTable validated = aggregate_scores(sheets, key);
  SixCountTable t;
  t.systems = validated.systems;
  for (const auto& sys : t.systems) t.counts[sys] = {};
  for (const auto& s : deblind(sheets, key)) {
    auto& row = t.counts[s.system];
    for (std::size_t c = 0; c < kCriterionCount; ++c) {
      if (s.scores.at(all_criteria()[c]) == kMaxScore) ++row[c];
    }
  }
  return t;
}

std::string SixCountTable::to_csv() const {
  std::vector<std::string> head = {"system"};
  for (Criterion c : all_criteria()) head.emplace_back(criterion_abbrev(c));
  std::string out = csv::row(head);
  for (const auto& sys : systems) {
    std::vector<std::string> row = {sys};
    for (Criterion c : all_criteria()) row.push_back(std::to_string(count(sys, c)));
    out += csv::row(row);
  }
  return out;
}

std::string SixCountTable::to_markdown(const std::vector<Criterion>& columns) const {
  std::vector<Criterion> cols = columns;
  if (cols.empty()) cols.assign(all_criteria().begin(), all_criteria().end());
  std::vector<std::string> head = {""};
  for (Criterion c : cols) head.emplace_back(criterion_abbrev(c));
  std::string out = markdown_row(head) + markdown_rule(head.size());
  for (const auto& sys : systems) {
    std::vector<std::string> row = {sys};
    for (Criterion c : cols) row.push_back(std::to_string(count(sys, c)));
    out += markdown_row(row);
  }
  return out;
}

// LLM judge

std::string_view judge_output_instruction() { return kJudgeOutputInstruction; }

JudgeBlock parse_judge_reply(std::string_view text, std::size_t expected) {
  const std::string raw(text);
  std::optional<JudgeBlock> fenced = parse_fenced(text, raw);
  JudgeBlock block = fenced ? std::move(*fenced) : parse_lines(text);
  if (block.empty()) throw JudgeParseError("no scores found in judge reply", raw);
  if (block.size() != expected) {
    throw JudgeParseError("judge reply scores " + std::to_string(block.size()) +
                              " candidates, expected " + std::to_string(expected),
                          raw);
  }
  int n = 1;
  for (const auto& [id, scores] : block) {
    if (id != n++) {
      throw JudgeParseError("judge reply candidate numbers are not 1.." + std::to_string(expected),
                            raw);
    }
    std::vector<std::string> missing;
    for (Criterion c : all_criteria()) {
      auto it = scores.find(c);
      if (it == scores.end()) {
        missing.emplace_back(criterion_abbrev(c));
      } else if (it->second < kMinScore || it->second > kMaxScore) {
        throw JudgeParseError("candidate " + std::to_string(id) + " " +
                                  std::string(criterion_abbrev(c)) + " score " +
                                  std::to_string(it->second) + " is outside 1..6",
                              raw);
      }
    }
    if (!missing.empty()) {
      throw JudgeParseError("candidate " + std::to_string(id) + " is missing " +
                                unicode::join(missing, ", "),
                            raw);
    }
  }
  return block;
}

std::string serialize_judge_block(const JudgeBlock& block) {
  std::string out = "```json\n{\n";
  std::size_t i = 0;
  for (const auto& [id, scores] : block) {
    out += "  \"" + std::to_string(id) + "\": {";
    std::size_t k = 0;
    for (const auto& [c, v] : scores) {
      out += "\"" + std::string(criterion_abbrev(c)) + "\": " + std::to_string(v);
      if (++k < scores.size()) out += ", ";
    }
    out += "}";
    if (++i < block.size()) out += ",";
    out += "\n";
  }
  return out + "}\n```";
}

JudgeResult llm_judge(LlmClient& client, const PoemPair& pair,
                      const std::vector<JudgeCandidate>& candidates, const ModelSpec& model,
                      std::uint64_t seed) {
  if (candidates.size() < 2 || candidates.size() > 5) {
    throw Error(ErrorCode::kInvalidArgument, "the judge rubric takes 2 to 5 candidates, got " +
                                                 std::to_string(candidates.size()));
  }
  std::vector<JudgeCandidate> order = candidates;
  std::mt19937_64 rng(pair_seed(seed, pair.pair_id));
  detail::seeded_shuffle(order, rng);

  JudgeResult result;
  result.key = BlindingKey(seed);
  Bindings bindings{{"criteria", criteria_block()},
                    {"source", format_poem(pair.source)},
                    {"reference", format_poem(pair.reference)}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::string id = std::to_string(i + 1);
    result.key.assign(pair.pair_id, id, order[i].system);
    bindings["candidate_" + id] = order[i].text;
  }
  RenderedPrompt prompt = render(judge_template(order.size()), bindings);
  prompt.final_text += "\n";
  prompt.final_text += judge_output_instruction();
  result.prompt = prompt.final_text;
  result.raw_response = client.complete(model, prompt);

  JudgeBlock block = parse_judge_reply(result.raw_response, order.size());
  for (const auto& [id, scores] : block) {
    result.sheets.push_back({model.name, pair.pair_id, std::to_string(id), scores});
  }
  return result;
}

std::string record_system_label(const TranslationRecord& record) {
  switch (record.system) {
    case SystemKind::kEapmt: return "EAPMT/" + record.model;
    case SystemKind::kExternal: return record.prompt_template_id;
    case SystemKind::kDirect:
      return record.model + "/" + record.prompt_template_id + "/" + std::to_string(record.shots) +
             "-shot";
  }
  return record.prompt_template_id;
}

// Poeticity

std::string pick_most_poetic(LlmClient& client, const Poem& poem, const ModelSpec& model) {
  const TemplateId id =
      poem.language == Language::kEn ? TemplateId::kPoeticPickEn : TemplateId::kPoeticPickZh;
  RenderedPrompt prompt = render(get_template(id), {{"poem", format_poem(poem)}});
  std::string response = client.complete(model, prompt);
  std::string line;
  for (const auto& l : response_lines(response)) {
    line = unicode::trim(l);
    if (!line.empty()) break;
  }
  static const std::array<std::pair<std::string_view, std::string_view>, 4> kQuotes = {{
      {"\"", "\""}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"\xE3\x80\x8C", "\xE3\x80\x8D"}, {"'", "'"}}};
  for (const auto& [open, close] : kQuotes) {
    if (line.size() >= open.size() + close.size() && line.starts_with(open) &&
        line.ends_with(close)) {
      line = unicode::trim(line.substr(open.size(), line.size() - open.size() - close.size()));
      break;
    }
  }
  return line;
}

ConsistencyResult poetic_consistency(
    const std::map<std::string, Poem>& poems, const std::map<std::string, std::string>& model_picks,
    const std::map<std::pair<std::string, std::string>, std::string>& human_ballots) {
  std::set<std::string> judges;
  for (const auto& [key, line] : human_ballots) {
    if (!poems.count(key.second)) {
      throw Error(ErrorCode::kSchema, "ballot of " + key.first + " names unknown poem '" +
                                          key.second + "'");
    }
    judges.insert(key.first);
  }
  if (judges.empty()) throw Error(ErrorCode::kInvalidArgument, "no human ballots");

  ConsistencyResult result;
  for (const auto& [pair_id, poem] : poems) {
    std::set<std::string> lines;
    for (const auto& l : poem.content_lines()) lines.insert(unicode::normalize_whitespace(l));

    std::map<std::string, int> tally;
    for (const auto& judge : judges) {
      auto it = human_ballots.find({judge, pair_id});
      if (it == human_ballots.end()) {
        throw Error(ErrorCode::kSchema, "judge " + judge + " did not vote on poem " + pair_id);
      }
      std::string picked = unicode::normalize_whitespace(it->second);
      if (!lines.count(picked)) {
        throw Error(ErrorCode::kSchema, "judge " + judge + " picked a line that is not in poem " +
                                            pair_id);
      }
      ++tally[picked];
    }
    int best = 0;
    int at_best = 0;
    std::string consensus;
    for (const auto& [line, votes] : tally) {
      if (votes > best) {
        best = votes;
        at_best = 1;
        consensus = line;
      } else if (votes == best) {
        ++at_best;
      }
    }
    if (at_best > 1) {
      result.unresolved.push_back(pair_id);
      continue;
    }
    ++result.resolved;

    auto pick = model_picks.find(pair_id);
    if (pick == model_picks.end()) {
      result.warnings.push_back("no model pick for poem " + pair_id);
      continue;
    }
    std::string normalized = unicode::normalize_whitespace(pick->second);
    if (!lines.count(normalized)) {
      result.warnings.push_back("model pick for poem " + pair_id + " is not a line of the poem");
      continue;
    }
    if (normalized == consensus) ++result.matches;
  }
  return result;
}

std::string ConsistencyTable::to_csv() const {
  std::vector<std::string> head = {"model"};
  head.insert(head.end(), columns.begin(), columns.end());
  std::string out = csv::row(head);
  for (const auto& [label, values] : rows) {
    std::vector<std::string> row = {label};
    for (int v : values) row.push_back(std::to_string(v));
    out += csv::row(row);
  }
  return out;
}

std::string ConsistencyTable::to_markdown() const {
  std::vector<std::string> head = {""};
  head.insert(head.end(), columns.begin(), columns.end());
  std::string out = markdown_row(head) + markdown_rule(head.size());
  for (const auto& [label, values] : rows) {
    std::vector<std::string> row = {label};
    for (int v : values) row.push_back(std::to_string(v));
    out += markdown_row(row);
  }
  return out;
}

}  // namespace eapmt
