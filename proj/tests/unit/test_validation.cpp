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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <regex>

#include "detail.hpp"
#include "eapmt/corpus.hpp"
#include "eapmt/error.hpp"
#include "eapmt/unicode.hpp"
#include "eapmt/validation.hpp"

namespace fs = std::filesystem;
using namespace eapmt;

namespace {

const fs::path kFixtures = EAPMT_FIXTURE_DIR;
const std::string kGarbage = "qzx vbn wrt 丂丄丅";

const Corpus& corpus() {
  static const Corpus c = load_corpus(kFixtures / "corpus.jsonl");
  return c;
}

Poem poem_with(std::size_t n) {
  Poem p;
  p.id = "p" + std::to_string(n);
  p.title = "T";
  for (std::size_t i = 0; i < n; ++i) p.lines.push_back("line " + std::to_string(i));
  return p;
}

// Answers a continuation prompt with the true last n lines of the titled poem.
std::string echo_suffix(const std::string& prompt) {
  std::smatch m;
  const bool en = prompt.rfind("Please", 0) == 0;
  std::regex re(en ? "entitled \"([^\"]*)\"" : "题为“(.*?)”");
  std::regex n_re(en ? "next (\\d+) lines" : "接下来的(\\d+)行");
  std::regex_search(prompt, m, re);
  const std::string title = m[1].str();
  std::regex_search(prompt, m, n_re);
  const std::size_t n = std::stoul(m[1].str());
  for (const auto& p : corpus().pairs) {
    const Poem& poem = en ? p.source : p.reference;
    if (poem.title != title) continue;
    auto lines = poem.content_lines();
    return unicode::join(std::vector<std::string>(lines.end() - static_cast<std::ptrdiff_t>(n), lines.end()), "\n");
  }
  throw Error(ErrorCode::kNotFound, "no poem titled " + title);
}

ProbeSpec spec(ProbeSide side, std::vector<double> fractions = {0.5, 0.7, 0.9}) {
  ProbeSpec s;
  s.side = side;
  s.fractions = std::move(fractions);
  s.model.name = "gpt-4-1106-preview";
  return s;
}

}  // namespace

TEST(Truncate, BalanceAtHalf) {
  Truncation t = truncate_prefix(corpus().find("balance").source, 0.5);
  EXPECT_EQ(t.prefix_content_lines, 7u);
  EXPECT_EQ(t.n_remaining, 6u);
  EXPECT_EQ(t.total, 13u);
  EXPECT_EQ(t.prefix_lines.back(), "It is, she knows,");
}

TEST(Truncate, ExactArithmeticCases) {
  EXPECT_EQ(truncate_prefix(poem_with(10), 0.9).prefix_content_lines, 9u);
  EXPECT_EQ(truncate_prefix(poem_with(10), 0.9).n_remaining, 1u);
  EXPECT_EQ(truncate_prefix(poem_with(13), 0.7).prefix_content_lines, 9u);
  EXPECT_EQ(truncate_prefix(poem_with(13), 0.7).n_remaining, 4u);
  EXPECT_EQ(truncate_prefix(poem_with(2), 0.5).prefix_content_lines, 1u);
}

TEST(Truncate, StanzaBreaksKeptInPrefixNotCounted) {
  const Poem& fog = corpus().find("fog").source;
  Truncation t = truncate_prefix(fog, 0.5);
  EXPECT_EQ(t.prefix_content_lines, 3u);
  EXPECT_EQ(t.prefix_lines.size(), 4u);
  EXPECT_EQ(t.prefix_lines[2], "");
  EXPECT_EQ(t.suffix_lines.size(), 3u);
}

TEST(Truncate, RejectsDegenerateInputs) {
  EXPECT_THROW(truncate_prefix(poem_with(1), 0.5), Error);
  EXPECT_THROW(truncate_prefix(poem_with(10), 0.0), Error);
  EXPECT_THROW(truncate_prefix(poem_with(10), 1.0), Error);
  EXPECT_THROW(truncate_prefix(poem_with(10), 0.97), Error);
  EXPECT_THROW(truncate_prefix(poem_with(10), 0.01), Error);
}

TEST(TruncateProperty, ReconstructionAndMonotonePrefixes) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> frac(0.01, 0.99);
  for (int trial = 0; trial < 500; ++trial) {
    Poem p = poem_with(2 + rng() % 40);
    if (rng() % 2) p.lines.insert(p.lines.begin() + 1 + static_cast<std::ptrdiff_t>(rng() % (p.lines.size() - 1)), "");
    const auto content = p.content_lines();
    double f1 = frac(rng), f2 = frac(rng);
    if (f1 > f2) std::swap(f1, f2);
    std::optional<Truncation> a, b;
    try { a = truncate_prefix(p, f1); } catch (const Error&) {}
    try { b = truncate_prefix(p, f2); } catch (const Error&) {}
    for (const auto& t : {a, b}) {
      if (!t) continue;
      std::vector<std::string> joined;
      for (const auto& l : t->prefix_lines) if (!l.empty()) joined.push_back(l);
      EXPECT_EQ(joined.size(), t->prefix_content_lines);
      joined.insert(joined.end(), t->suffix_lines.begin(), t->suffix_lines.end());
      EXPECT_EQ(joined, content);
      EXPECT_EQ(t->prefix_content_lines + t->n_remaining, content.size());
      EXPECT_GE(t->n_remaining, 1u);
    }
    if (a && b) {
      EXPECT_LE(a->prefix_lines.size(), b->prefix_lines.size());
      EXPECT_TRUE(std::equal(a->prefix_lines.begin(), a->prefix_lines.end(), b->prefix_lines.begin()));
    }
  }
}

TEST(ProbeSpecTest, Validation) {
  EXPECT_NO_THROW(validate_probe_spec(spec(ProbeSide::kSource)));
  EXPECT_THROW(validate_probe_spec(spec(ProbeSide::kSource, {0.7, 0.5})), Error);
  EXPECT_THROW(validate_probe_spec(spec(ProbeSide::kSource, {0.5, 0.5})), Error);
  EXPECT_THROW(validate_probe_spec(spec(ProbeSide::kSource, {})), Error);
  EXPECT_THROW(validate_probe_spec(spec(ProbeSide::kSource, {1.0})), Error);
}

TEST(Probe, EchoScoresHundredOnBothSides) {
  auto client = make_stub({StubRule{".", echo_suffix}});
  for (ProbeSide side : {ProbeSide::kSource, ProbeSide::kTranslation}) {
    ProbeRun run = run_probe(*client, corpus().find("balance"), spec(side));
    ASSERT_EQ(run.results.size(), 3u);
    EXPECT_TRUE(run.errors.empty());
    for (const auto& r : run.results) {
      EXPECT_EQ(detail::format_fixed(r.bleu.score, 2), "100.00");
      EXPECT_EQ(r.prefix_line_count + r.suffix_line_count, 13u);
      EXPECT_NE(r.bleu.signature.find(side == ProbeSide::kSource ? "tok:13a" : "tok:zh"),
                std::string::npos);
    }
  }
}

TEST(Probe, GarbageStaysBelowThreshold) {
  auto client = make_stub({StubRule::fixed(".", kGarbage)});
  for (ProbeSide side : {ProbeSide::kSource, ProbeSide::kTranslation}) {
    for (const auto& r : run_probe(*client, corpus().find("balance"), spec(side)).results) {
      EXPECT_LT(r.bleu.score, 5.0);
    }
  }
}

TEST(Probe, OvergenerationIsCutBeforeScoring) {
  auto client = make_stub({StubRule{".", [](const std::string& p) {
    return "\n" + echo_suffix(p) + "\nan extra line\nand another";
  }}});
  ProbeRun run = run_probe(*client, corpus().find("balance"), spec(ProbeSide::kSource, {0.5}));
  ASSERT_EQ(run.results.size(), 1u);
  EXPECT_EQ(detail::format_fixed(run.results[0].bleu.score, 2), "100.00");
  EXPECT_NE(run.results[0].raw_response.find("an extra line"), std::string::npos);
  EXPECT_EQ(run.results[0].generated_suffix.find("an extra line"), std::string::npos);
}

TEST(Probe, PromptCarriesTitleCountsAndPrefix) {
  auto client = make_stub({StubRule{".", echo_suffix}});
  run_probe(*client, corpus().find("balance"), spec(ProbeSide::kSource, {0.5}));
  const std::string expected =
      detail::read_file(fs::path(EAPMT_TEST_DIR) / "golden/continuation_balance_50.txt");
  EXPECT_EQ(client->requested_prompts().at(0) + "\n", expected);
}

TEST(Probe, FailedFractionRecordedOthersContinue) {
  auto client = make_stub({StubRule{".", [](const std::string& p) -> std::string {
    if (p.find("next 4 lines") != std::string::npos) throw Error(ErrorCode::kNetwork, "down");
    return echo_suffix(p);
  }}});
  ProbeRun run = run_probe(*client, corpus().find("balance"), spec(ProbeSide::kSource));
  EXPECT_EQ(run.results.size(), 2u);
  ASSERT_EQ(run.errors.size(), 1u);
  EXPECT_DOUBLE_EQ(run.errors[0].fraction, 0.7);
}

TEST(Report, SinglePoemEchoAllCellsHundred) {
  auto client = make_stub({StubRule{".", echo_suffix}});
  std::vector<ProbeResult> all;
  for (ProbeSide side : {ProbeSide::kSource, ProbeSide::kTranslation}) {
    auto run = run_probe(*client, corpus().find("balance"), spec(side));
    all.insert(all.end(), run.results.begin(), run.results.end());
  }
  ProbeReport rep = probe_report(all);
  ASSERT_EQ(rep.cells.size(), 6u);
  for (const auto& c : rep.cells) EXPECT_EQ(c.bleu.formatted(), "100.0");
  const std::string md = rep.to_markdown();
  EXPECT_NE(md.find("| | 50% | 70% | 90% |"), std::string::npos);
  EXPECT_NE(md.find("| Source Poem | 100.0 | 100.0 | 100.0 |"), std::string::npos);
  EXPECT_NE(md.find("| Translation | 100.0 | 100.0 | 100.0 |"), std::string::npos);
  EXPECT_EQ(rep.to_csv().substr(0, rep.to_csv().find('\n')), "side,fraction,bleu,poems,signature");
}

TEST(Report, MixedEchoAndGarbageLiesStrictlyBetween) {
  const std::string fog_title = corpus().find("fog").source.title;
  auto client = make_stub({StubRule{".", [fog_title](const std::string& p) {
    return p.find("\"" + fog_title + "\"") != std::string::npos ? kGarbage : echo_suffix(p);
  }}});
  std::vector<ProbeResult> all, echoed, garbage;
  for (const char* id : {"balance", "fog"}) {
    auto run = run_probe(*client, corpus().find(id), spec(ProbeSide::kSource));
    ASSERT_TRUE(run.errors.empty());
    auto& bucket = std::string(id) == "fog" ? garbage : echoed;
    bucket.insert(bucket.end(), run.results.begin(), run.results.end());
    all.insert(all.end(), run.results.begin(), run.results.end());
  }
  ProbeReport mixed = probe_report(all);
  ProbeReport hi = probe_report(echoed);
  ProbeReport lo = probe_report(garbage);
  for (double f : {0.5, 0.7, 0.9}) {
    const double v = mixed.cell(ProbeSide::kSource, f).bleu.score;
    EXPECT_GT(v, lo.cell(ProbeSide::kSource, f).bleu.score) << f;
    EXPECT_LT(v, hi.cell(ProbeSide::kSource, f).bleu.score) << f;
    EXPECT_EQ(mixed.cell(ProbeSide::kSource, f).poems, 2u);
  }
}

TEST(Report, RaggedGridNamesMissingCell) {
  auto client = make_stub({StubRule{".", echo_suffix}});
  std::vector<ProbeResult> all;
  for (ProbeSide side : {ProbeSide::kSource, ProbeSide::kTranslation}) {
    auto run = run_probe(*client, corpus().find("balance"), spec(side));
    all.insert(all.end(), run.results.begin(), run.results.end());
  }
  all.pop_back();
  try {
    probe_report(all);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRaggedGrid);
    EXPECT_NE(std::string(e.what()).find("translation"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("90%"), std::string::npos);
  }
}

TEST(Report, EmptyResultsRejected) { EXPECT_THROW(probe_report({}), Error); }

TEST(Sides, NamesRoundTrip) {
  for (ProbeSide s : {ProbeSide::kSource, ProbeSide::kTranslation}) {
    EXPECT_EQ(parse_probe_side(probe_side_name(s)), s);
  }
  EXPECT_THROW(parse_probe_side("both"), Error);
}
