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

#include "eapmt/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <unordered_set>

#include "detail.hpp"
#include "eapmt/error.hpp"
#include "eapmt/unicode.hpp"

namespace eapmt {

using detail::json;

std::string_view language_tag(Language lang) {
  return lang == Language::kEn ? "en" : "zh";
}

Language parse_language(std::string_view tag) {
  if (tag == "en") return Language::kEn;
  if (tag == "zh") return Language::kZh;
  throw Error(ErrorCode::kSchema, "unknown language tag '" + std::string(tag) + "'");
}

std::vector<std::string> Poem::content_lines() const {
  std::vector<std::string> out;
  for (const auto& line : lines) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::size_t Poem::content_line_count() const {
  return static_cast<std::size_t>(
      std::count_if(lines.begin(), lines.end(), [](const auto& l) { return !l.empty(); }));
}

CorpusStats& CorpusStats::operator+=(const CorpusStats& other) {
  poems += other.poems;
  lines += other.lines;
  tokens += other.tokens;
  return *this;
}

const PoemPair* Corpus::find_if_present(std::string_view pair_id) const {
  for (const auto& p : pairs) {
    if (p.pair_id == pair_id) return &p;
  }
  return nullptr;
}

const PoemPair& Corpus::find(std::string_view pair_id) const {
  if (const PoemPair* p = find_if_present(pair_id)) return *p;
  throw Error(ErrorCode::kNotFound, "no pair with id '" + std::string(pair_id) + "'");
}

std::vector<std::string> validate_poem(const Poem& poem) {
  if (poem.lines.empty() || poem.content_line_count() == 0) {
    throw Error(ErrorCode::kSchema, "poem '" + poem.id + "' has no content lines");
  }
  std::vector<std::string> warnings;
  bool has_han = unicode::contains_han(poem.title);
  for (const auto& line : poem.lines) has_han = has_han || unicode::contains_han(line);
  if (poem.language == Language::kZh && !has_han) {
    warnings.push_back("poem '" + poem.id + "' is tagged zh but contains no CJK characters");
  } else if (poem.language == Language::kEn && has_han) {
    warnings.push_back("poem '" + poem.id + "' is tagged en but contains CJK characters");
  }
  return warnings;
}

namespace {

std::string require_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorCode::kSchema, where + ": missing or non-string field '" + key + "'");
  }
  const auto& s = it->get_ref<const std::string&>();
  if (!unicode::is_valid_utf8(s)) {
    throw Error(ErrorCode::kSchema, where + ": field '" + key + "' is not valid UTF-8");
  }
  return unicode::nfc(s);
}

Poem poem_from_json(const json& obj, const std::string& id, const std::string& where) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::kSchema, where + ": poem must be an object");
  }
  Poem poem;
  poem.id = id;
  poem.title = require_string(obj, "title", where);
  poem.author = require_string(obj, "author", where);
  poem.language = parse_language(require_string(obj, "language", where));
  auto lines = obj.find("lines");
  if (lines == obj.end() || !lines->is_array()) {
    throw Error(ErrorCode::kSchema, where + ": missing array field 'lines'");
  }
  for (const auto& l : *lines) {
    if (!l.is_string()) throw Error(ErrorCode::kSchema, where + ": non-string line");
    poem.lines.push_back(unicode::nfc(l.get<std::string>()));
  }
  return poem;
}

json poem_to_json(const Poem& poem) {
  json j;
  j["title"] = unicode::nfc(poem.title);
  j["language"] = language_tag(poem.language);
  j["author"] = unicode::nfc(poem.author);
  json lines = json::array();
  for (const auto& l : poem.lines) lines.push_back(unicode::nfc(l));
  j["lines"] = std::move(lines);
  return j;
}

}  // namespace

Corpus parse_corpus(std::string_view text) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& raw : unicode::split_lines(text)) {
    ++line_no;
    if (unicode::trim(raw).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    json record;
    try {
      record = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + ": malformed JSON record (" + e.what() + ")");
    }
    if (!record.is_object()) {
      throw Error(ErrorCode::kSchema, where + ": record must be a JSON object");
    }
    PoemPair pair;
    try {
      pair.pair_id = require_string(record, "pair_id", where);
      if (pair.pair_id.empty()) throw Error(ErrorCode::kSchema, where + ": empty pair_id");
      if (!record.contains("source") || !record.contains("reference")) {
        throw Error(ErrorCode::kSchema, where + ": record needs 'source' and 'reference'");
      }
      pair.source = poem_from_json(record["source"], pair.pair_id + "/source", where);
      pair.reference = poem_from_json(record["reference"], pair.pair_id + "/reference", where);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kSchema && std::string_view(e.what()).starts_with("line ")) throw;
      throw Error(e.code(), where + ": " + e.what());
    }
    if (pair.source.language != Language::kEn) {
      throw Error(ErrorCode::kSchema, where + ": source poem must be tagged 'en'");
    }
    if (pair.reference.language != Language::kZh) {
      throw Error(ErrorCode::kSchema, where + ": reference poem must be tagged 'zh'");
    }
    for (const Poem* poem : {&pair.source, &pair.reference}) {
      std::vector<std::string> warnings;
      try {
        warnings = validate_poem(*poem);
      } catch (const Error& e) {
        throw Error(e.code(), where + ": " + e.what());
      }
      for (auto& w : warnings) {
        spdlog::warn("{}: {}", where, w);
        corpus.warnings.push_back(where + ": " + w);
      }
    }
    if (!seen.insert(pair.pair_id).second) {
      throw Error(ErrorCode::kSchema, where + ": duplicate pair_id '" + pair.pair_id + "'");
    }
    corpus.pairs.push_back(std::move(pair));
  }
  if (corpus.pairs.empty()) {
    throw Error(ErrorCode::kSchema, "corpus file contains no records");
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kIo, "corpus file not found: " + path.string());
  }
  return parse_corpus(detail::read_file(path));
}

std::string serialize_pair(const PoemPair& pair) {
  json j;
  j["pair_id"] = unicode::nfc(pair.pair_id);
  j["source"] = poem_to_json(pair.source);
  j["reference"] = poem_to_json(pair.reference);
  return j.dump();
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& pair : corpus.pairs) {
    out += serialize_pair(pair);
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  detail::write_file_atomic(path, serialize_corpus(corpus));
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  for (const auto& pair : corpus.pairs) {
    ++stats.poems;
    for (const auto& line : pair.source.lines) {
      if (line.empty()) continue;
      ++stats.lines;
      stats.tokens += unicode::split_whitespace(line).size();
    }
  }
  return stats;
}

std::vector<PoemPair> sample_test_set(const Corpus& corpus, std::size_t n, std::uint64_t seed,
                                      const std::set<std::string>& exclude) {
  std::vector<const PoemPair*> pool;
  for (const auto& pair : corpus.pairs) {
    if (!exclude.contains(pair.pair_id)) pool.push_back(&pair);
  }
  if (n > pool.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot sample " + std::to_string(n) + " pairs from " +
                    std::to_string(pool.size()) + " available");
  }
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first n slots end up uniformly sampled.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + detail::uniform_below(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  std::vector<PoemPair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(*pool[i]);
  return out;
}

}  // namespace eapmt
