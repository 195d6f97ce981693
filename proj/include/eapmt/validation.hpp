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

#include <string>
#include <vector>

#include "eapmt/corpus.hpp"
#include "eapmt/llm_client.hpp"
#include "eapmt/metrics.hpp"

namespace eapmt {

enum class ProbeSide { kSource, kTranslation };

std::string_view probe_side_name(ProbeSide side);
ProbeSide parse_probe_side(std::string_view name);

struct ProbeSpec {
  std::vector<double> fractions{0.5, 0.7, 0.9};
  ProbeSide side = ProbeSide::kSource;
  ModelSpec model;
};

struct Truncation {
  // Poem lines up to the last prefix content line, stanza breaks included.
  std::vector<std::string> prefix_lines;
  std::vector<std::string> suffix_lines;  // content lines only
  std::size_t prefix_content_lines = 0;
  std::size_t n_remaining = 0;
  std::size_t total = 0;
};

// Prefix length is round-half-up(fraction * content lines). Throws
// kInvalidArgument when the poem is too short or nothing would remain.
Truncation truncate_prefix(const Poem& poem, double fraction);

struct ProbeResult {
  std::string pair_id;
  ProbeSide side = ProbeSide::kSource;
  double fraction = 0.0;
  std::size_t prefix_line_count = 0;
  std::size_t suffix_line_count = 0;
  std::string raw_response;
  // The response cut to n_remaining content lines.
  std::string generated_suffix;
  std::string true_suffix;
  BleuScore bleu;

  std::string to_json() const;
};

struct ProbeError {
  std::string pair_id;
  ProbeSide side = ProbeSide::kSource;
  double fraction = 0.0;
  std::string message;
};

struct ProbeRun {
  std::vector<ProbeResult> results;
  std::vector<ProbeError> errors;
};

void validate_probe_spec(const ProbeSpec& spec);

ProbeRun run_probe(LlmClient& client, const PoemPair& pair, const ProbeSpec& spec);

struct ProbeCell {
  ProbeSide side;
  double fraction;
  BleuScore bleu;
  std::size_t poems = 0;
};

struct ProbeReport {
  std::vector<ProbeSide> sides;
  std::vector<double> fractions;
  std::vector<ProbeCell> cells;  // row-major: sides x fractions

  const ProbeCell& cell(ProbeSide side, double fraction) const;
  std::string to_csv() const;
  std::string to_markdown() const;
};

// Corpus BLEU per (side, fraction) over all poems. Throws kRaggedGrid naming
// missing cells.
ProbeReport probe_report(const std::vector<ProbeResult>& results);

}  // namespace eapmt
