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

#include "eapmt/validation.hpp"

#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "eapmt/csv.hpp"
#include "eapmt/error.hpp"
#include "eapmt/prompts.hpp"
#include "eapmt/translate.hpp"
#include "eapmt/unicode.hpp"

namespace eapmt {

using detail::json;

namespace {

constexpr double kFractionTolerance = 1e-9;

bool same_fraction(double a, double b) { return std::fabs(a - b) < kFractionTolerance; }

std::string percent_label(double fraction) {
  double pct = fraction * 100.0;
  if (std::fabs(pct - std::round(pct)) < 1e-6) {
    return std::to_string(static_cast<long long>(std::llround(pct))) + "%";
  }
  return detail::format_fixed(pct, 1) + "%";
}

std::string_view side_row_label(ProbeSide side) {
  return side == ProbeSide::kSource ? "Source Poem" : "Translation";
}

BleuConfig config_for(ProbeSide side) {
  return side == ProbeSide::kSource ? bleu_config_for_english() : bleu_config_for_chinese();
}

}  // namespace

std::string_view probe_side_name(ProbeSide side) {
  return side == ProbeSide::kSource ? "source" : "translation";
}

ProbeSide parse_probe_side(std::string_view name) {
  if (name == "source") return ProbeSide::kSource;
  if (name == "translation") return ProbeSide::kTranslation;
  throw Error(ErrorCode::kInvalidArgument, "unknown probe side '" + std::string(name) + "'");
}

Truncation truncate_prefix(const Poem& poem, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fraction must lie strictly between 0 and 1");
  }
  const std::size_t total = poem.content_line_count();
  if (total < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "poem '" + poem.id + "' has fewer than 2 content lines");
  }
  const auto prefix = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(total) + 0.5 + 1e-9));
  if (prefix < 1 || prefix >= total) {
    throw Error(ErrorCode::kInvalidArgument,
                "fraction " + detail::format_fixed(fraction, 3) + " of " + std::to_string(total) +
                    " lines leaves no prefix or nothing to generate");
  }
  Truncation t;
  t.total = total;
  t.prefix_content_lines = prefix;
  t.n_remaining = total - prefix;
  std::size_t seen = 0;
  for (const auto& line : poem.lines) {
    if (seen < prefix) {
      t.prefix_lines.push_back(line);
      if (!line.empty()) ++seen;
    } else if (!line.empty()) {
      t.suffix_lines.push_back(line);
    }
  }
  return t;
}

void validate_probe_spec(const ProbeSpec& spec) {
  if (spec.fractions.empty()) throw Error(ErrorCode::kInvalidArgument, "no probe fractions given");
  for (std::size_t i = 0; i < spec.fractions.size(); ++i) {
    double f = spec.fractions[i];
    if (!(f > 0.0 && f < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "probe fractions must lie in (0, 1)");
    }
    if (i > 0 && !(f > spec.fractions[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "probe fractions must be strictly increasing");
    }
  }
  spec.model.validate();
}

std::string ProbeResult::to_json() const {
  json j;
  j["pair_id"] = pair_id;
  j["side"] = probe_side_name(side);
  j["fraction"] = fraction;
  j["prefix_line_count"] = prefix_line_count;
  j["suffix_line_count"] = suffix_line_count;
  j["generated_suffix"] = generated_suffix;
  j["true_suffix"] = true_suffix;
  j["raw_response"] = raw_response;
  j["bleu"] = bleu.score;
  j["signature"] = bleu.signature;
  return j.dump();
}

ProbeRun run_probe(LlmClient& client, const PoemPair& pair, const ProbeSpec& spec) {
  validate_probe_spec(spec);
  const bool source_side = spec.side == ProbeSide::kSource;
  const Poem& poem = source_side ? pair.source : pair.reference;
  const PromptTemplate& tmpl =
      get_template(source_side ? TemplateId::kContinuation : TemplateId::kContinuationZh);

  ProbeRun run;
  for (double fraction : spec.fractions) {
    try {
      Truncation t = truncate_prefix(poem, fraction);
      RenderedPrompt prompt = render(tmpl, {{"title", poem.title},
                                            {"n_remaining", std::to_string(t.n_remaining)},
                                            {"total", std::to_string(t.total)},
                                            {"prefix", format_lines(t.prefix_lines)}});
      std::string response = client.complete(spec.model, prompt);

      std::vector<std::string> generated;
      for (auto& line : response_lines(response)) {
        if (unicode::trim(line).empty()) continue;
        if (generated.size() == t.n_remaining) break;
        generated.push_back(std::move(line));
      }
      ProbeResult r;
      r.pair_id = pair.pair_id;
      r.side = spec.side;
      r.fraction = fraction;
      r.prefix_line_count = t.prefix_content_lines;
      r.suffix_line_count = t.n_remaining;
      r.raw_response = std::move(response);
      r.generated_suffix = unicode::join(generated, "\n");
      r.true_suffix = unicode::join(t.suffix_lines, "\n");
      r.bleu = sentence_bleu(r.generated_suffix, r.true_suffix, config_for(spec.side));
      run.results.push_back(std::move(r));
    } catch (const Error& e) {
      run.errors.push_back({pair.pair_id, spec.side, fraction, e.what()});
    }
  }
  return run;
}

const ProbeCell& ProbeReport::cell(ProbeSide side, double fraction) const {
  for (const auto& c : cells) {
    if (c.side == side && same_fraction(c.fraction, fraction)) return c;
  }
  throw Error(ErrorCode::kNotFound, "no probe cell for " + std::string(probe_side_name(side)) +
                                        " at " + percent_label(fraction));
}

ProbeReport probe_report(const std::vector<ProbeResult>& results) {
  if (results.empty()) throw Error(ErrorCode::kInvalidArgument, "no probe results to report");
  ProbeReport report;
  for (const auto& r : results) {
    if (std::find(report.sides.begin(), report.sides.end(), r.side) == report.sides.end()) {
      report.sides.push_back(r.side);
    }
    if (std::none_of(report.fractions.begin(), report.fractions.end(),
                     [&](double f) { return same_fraction(f, r.fraction); })) {
      report.fractions.push_back(r.fraction);
    }
  }
  std::sort(report.sides.begin(), report.sides.end());
  std::sort(report.fractions.begin(), report.fractions.end());

  std::vector<std::string> missing;
  for (ProbeSide side : report.sides) {
    for (double f : report.fractions) {
      std::vector<std::string> hyps;
      std::vector<std::string> refs;
      for (const auto& r : results) {
        if (r.side == side && same_fraction(r.fraction, f)) {
          hyps.push_back(r.generated_suffix);
          refs.push_back(r.true_suffix);
        }
      }
      if (hyps.empty()) {
        missing.push_back("(" + std::string(probe_side_name(side)) + ", " + percent_label(f) + ")");
        continue;
      }
      report.cells.push_back({side, f, corpus_bleu(hyps, refs, config_for(side)), hyps.size()});
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kRaggedGrid, "probe grid is missing cells " + unicode::join(missing, ", "));
  }
  return report;
}

std::string ProbeReport::to_csv() const {
  std::string out = csv::row({"side", "fraction", "bleu", "poems", "signature"});
  for (const auto& c : cells) {
    out += csv::row({std::string(probe_side_name(c.side)), detail::format_fixed(c.fraction, 2),
                     c.bleu.formatted(), std::to_string(c.poems), c.bleu.signature});
  }
  return out;
}

std::string ProbeReport::to_markdown() const {
  std::string out = "| |";
  for (double f : fractions) out += " " + percent_label(f) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < fractions.size(); ++i) out += "---|";
  out += "\n";
  for (ProbeSide side : sides) {
    out += "| " + std::string(side_row_label(side)) + " |";
    for (double f : fractions) out += " " + cell(side, f).bleu.formatted() + " |";
    out += "\n";
  }
  return out;
}

}  // namespace eapmt
