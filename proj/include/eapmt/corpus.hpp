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

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace eapmt {

enum class Language { kEn, kZh };

std::string_view language_tag(Language lang);
Language parse_language(std::string_view tag);

struct Poem {
  std::string id;
  std::string title;
  Language language = Language::kEn;
  std::string author;
  // An empty string marks a stanza break.
  std::vector<std::string> lines;

  // Lines that are not stanza breaks.
  std::vector<std::string> content_lines() const;
  std::size_t content_line_count() const;

  bool operator==(const Poem&) const = default;
};

struct PoemPair {
  std::string pair_id;
  Poem source;     // en
  Poem reference;  // zh

  bool operator==(const PoemPair&) const = default;
};

struct CorpusStats {
  std::uint64_t poems = 0;
  std::uint64_t lines = 0;
  std::uint64_t tokens = 0;

  CorpusStats& operator+=(const CorpusStats& other);
  bool operator==(const CorpusStats&) const = default;
};

struct Corpus {
  std::vector<PoemPair> pairs;
  // Script-heuristic violations found while loading; never fatal.
  std::vector<std::string> warnings;

  const PoemPair& find(std::string_view pair_id) const;
  const PoemPair* find_if_present(std::string_view pair_id) const;
};

// Checks the Poem invariants and returns heuristic warnings. Throws
// Error(kSchema) when a hard invariant fails.
std::vector<std::string> validate_poem(const Poem& poem);

// One record per line, see the README for the schema. Throws with the
// 1-based line number on malformed records.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view text);

// Canonical serialization: NFC, fixed key order, one record per line.
std::string serialize_pair(const PoemPair& pair);
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

CorpusStats corpus_stats(const Corpus& corpus);

std::vector<PoemPair> sample_test_set(const Corpus& corpus, std::size_t n,
                                      std::uint64_t seed,
                                      const std::set<std::string>& exclude);

}  // namespace eapmt
