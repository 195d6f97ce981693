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
#include <set>

#include "detail.hpp"
#include "eapmt/corpus.hpp"
#include "eapmt/error.hpp"
#include "eapmt/translate.hpp"

namespace fs = std::filesystem;
using namespace eapmt;

namespace {

const fs::path kFixtures = EAPMT_FIXTURE_DIR;
const fs::path kData = fs::path(EAPMT_TEST_DIR) / "data";

const Corpus& corpus() {
  static const Corpus c = load_corpus(kFixtures / "corpus.jsonl");
  return c;
}

ModelSpec model(const std::string& name = "gpt-4-1106-preview") {
  ModelSpec m;
  m.name = name;
  return m;
}

std::unique_ptr<LlmClient> replay_client() {
  ClientOptions o;
  o.mode = ClientMode::kReplay;
  o.cache_dir = kFixtures / "cache";
  return std::make_unique<LlmClient>(std::make_shared<OfflineBackend>(), o);
}

const std::string kQuatrain = "床前明月光\n疑是地上霜\n举头望明月\n低头思故乡";

std::size_t occurrences(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(ResponseLines, TrimsOuterBlankLines) {
  EXPECT_EQ(response_lines("\n\n a\n\nb \n  \n"), (std::vector<std::string>{" a", "", "b "}));
  EXPECT_EQ(response_lines("x\r\ny"), (std::vector<std::string>{"x", "y"}));
  EXPECT_TRUE(response_lines(" \n\n").empty());
}

TEST(Direct, StubQuatrainZeroShot) {
  auto client = make_stub({StubRule::fixed("^Please translate", kQuatrain)});
  const PoemPair& p = corpus().find("fog");
  TranslationRecord r = translate_direct(*client, p.source, TemplateId::kH3, model(), {}, p.pair_id);
  EXPECT_EQ(r.shots, 0);
  EXPECT_EQ(r.output_lines.size(), 4u);
  EXPECT_EQ(r.system, SystemKind::kDirect);
  EXPECT_FALSE(r.explanation_id.has_value());
  EXPECT_EQ(r.prompt_template_id, "H3");
  EXPECT_NO_THROW(r.validate());
}

TEST(Direct, ReplayBalanceUnderH2OnGpt4) {
  auto client = replay_client();
  const PoemPair& p = corpus().find("balance");
  TranslationRecord r = translate_direct(*client, p.source, TemplateId::kH2, model(), {}, p.pair_id);
  EXPECT_EQ(r.text(), detail::read_file(kData / "balance/best_gpt4_h2.txt"));
  EXPECT_EQ(client->backend_calls(), 0u);
}

TEST(Direct, OneShotPromptHasOneExampleBlock) {
  auto client = make_stub({StubRule::fixed("^Please provide", kQuatrain)});
  const auto& pairs = corpus().pairs;
  std::vector<PoemPair> ex = {pairs[4]};
  TranslationRecord r =
      translate_direct(*client, pairs[0].source, TemplateId::kFewshotGpt4, model(), ex, pairs[0].pair_id);
  EXPECT_EQ(r.shots, 1);
  EXPECT_EQ(r.example_ids, std::vector<std::string>{pairs[4].pair_id});
  const std::string captured = client->requested_prompts().back();
  EXPECT_EQ(captured, r.prompt);
  EXPECT_EQ(occurrences(captured, format_poem(pairs[4].reference)), 1u);
}

TEST(Direct, EchoIsDegenerate) {
  auto client = make_stub({StubRule{".", [](const std::string& p) { return p + "\n"; }}});
  const PoemPair& p = corpus().find("fog");
  try {
    translate_direct(*client, p.source, TemplateId::kH1, model(), {}, p.pair_id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateOutput);
  }
}

TEST(Direct, RejectsNonTranslationTemplatesAndStrayExamples) {
  auto client = make_stub({StubRule::fixed(".", kQuatrain)});
  const auto& pairs = corpus().pairs;
  EXPECT_THROW(translate_direct(*client, pairs[0].source, TemplateId::kContinuation, model(), {}, "x"),
               Error);
  std::vector<PoemPair> ex = {pairs[1]};
  EXPECT_THROW(translate_direct(*client, pairs[0].source, TemplateId::kH2, model(), ex, "x"), Error);
  EXPECT_EQ(client->backend_calls(), 0u);
}

TEST(Eapmt, ReplayBalanceGpt4) {
  auto client = replay_client();
  const PoemPair& p = corpus().find("balance");
  EapmtResult r = eapmt_translate(*client, p.source, p.pair_id, model(), EapmtVariant::kGpt4);
  const std::string expl = detail::read_file(kData / "balance/explanation_gpt4.txt");
  EXPECT_EQ(r.explanation.explanation_text, expl);
  EXPECT_EQ(r.translation.text(), detail::read_file(kData / "balance/eapmt_gpt4.txt"));
  EXPECT_EQ(r.translation.output_lines.front(), "平衡");
  EXPECT_NE(r.translation.prompt.find(expl), std::string::npos);
  EXPECT_EQ(r.translation.explanation_id, r.explanation.explanation_id);
  EXPECT_NO_THROW(r.translation.validate());
}

TEST(Eapmt, ReplayBalanceGpt35) {
  auto client = replay_client();
  const PoemPair& p = corpus().find("balance");
  EapmtResult r =
      eapmt_translate(*client, p.source, p.pair_id, model("gpt-3.5-turbo"), EapmtVariant::kGpt35);
  EXPECT_EQ(r.translation.text(), detail::read_file(kData / "balance/eapmt_gpt35.txt"));
  EXPECT_EQ(r.translation.prompt_template_id, "EAPMT_STEP2_GPT35");
}

TEST(Eapmt, SentinelEmbeddedVerbatim) {
  auto client = make_stub({StubRule::fixed("^Please provide an explanation", "EXPL-SENTINEL"),
                           StubRule::fixed("based on its explanation", kQuatrain)});
  const PoemPair& p = corpus().find("fog");
  EapmtResult r = eapmt_translate(*client, p.source, p.pair_id, model(), EapmtVariant::kGpt4);
  auto prompts = client->requested_prompts();
  ASSERT_EQ(prompts.size(), 2u);
  EXPECT_NE(prompts[1].find("EXPL-SENTINEL"), std::string::npos);
  EXPECT_EQ(r.translation.output_lines.size(), 4u);
}

TEST(Eapmt, EmptyExplanationStopsBeforeStepTwo) {
  auto client = make_stub({StubRule::fixed("^Please provide an explanation", ""),
                           StubRule::fixed("based on its explanation", kQuatrain)});
  const PoemPair& p = corpus().find("fog");
  try {
    eapmt_translate(*client, p.source, p.pair_id, model(), EapmtVariant::kGpt4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExplanationStage);
  }
  EXPECT_EQ(client->requested_prompts().size(), 1u);
}

TEST(Eapmt, StepTwoFailureKeepsExplanation) {
  auto client = make_stub({StubRule::fixed("^Please provide an explanation", "An explanation.")});
  const PoemPair& p = corpus().find("fog");
  try {
    eapmt_translate(*client, p.source, p.pair_id, model(), EapmtVariant::kGpt35);
    FAIL();
  } catch (const EapmtStageError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTranslationStage);
    EXPECT_EQ(e.explanation().explanation_text, "An explanation.");
  }
}

TEST(Eapmt, RejectsChineseSource) {
  auto client = make_stub({});
  const PoemPair& p = corpus().find("fog");
  EXPECT_THROW(eapmt_translate(*client, p.reference, p.pair_id, model(), EapmtVariant::kGpt4), Error);
}

TEST(Records, ValidateInvariants) {
  TranslationRecord r;
  r.pair_id = "a";
  r.model = "m";
  r.prompt_template_id = "H1";
  r.output_lines = {"x"};
  EXPECT_NO_THROW(r.validate());
  r.explanation_id = "e";
  EXPECT_THROW(r.validate(), Error);
  r.system = SystemKind::kEapmt;
  EXPECT_NO_THROW(r.validate());
  r.explanation_id.reset();
  EXPECT_THROW(r.validate(), Error);
  r.system = SystemKind::kDirect;
  r.output_lines.clear();
  EXPECT_THROW(r.validate(), Error);
  r.output_lines = {"x"};
  r.example_ids = {"a"};
  r.shots = 1;
  EXPECT_THROW(r.validate(), Error);
}

TEST(Records, JsonRoundTrip) {
  auto client = replay_client();
  const PoemPair& p = corpus().find("balance");
  EapmtResult r = eapmt_translate(*client, p.source, p.pair_id, model(), EapmtVariant::kGpt4);
  EXPECT_EQ(TranslationRecord::from_json(r.translation.to_json()), r.translation);
  EXPECT_EQ(ExplanationRecord::from_json(r.explanation.to_json()), r.explanation);
  EXPECT_EQ(TranslationRecord::from_json(r.translation.to_json()).to_json(), r.translation.to_json());
}

TEST(Grid, CardinalityTwoByThree) {
  auto client = make_stub({StubRule::fixed(".", kQuatrain)});
  std::vector<PoemPair> test(corpus().pairs.begin(), corpus().pairs.begin() + 2);
  std::vector<GridCondition> conds = {{TemplateId::kH1, 0, model()},
                                      {TemplateId::kP3, 0, model()},
                                      {TemplateId::kFewshotGpt35, 3, model("gpt-3.5-turbo")}};
  GridResult g = run_experiment_grid(*client, test, corpus(), conds, 7);
  EXPECT_EQ(g.records.size(), 6u);
  EXPECT_TRUE(g.errors.empty());
  for (const auto& r : g.records) {
    for (const auto& id : r.example_ids) EXPECT_NE(id, r.pair_id);
    for (const auto& id : r.example_ids) {
      EXPECT_NE(id, test[0].pair_id);
      EXPECT_NE(id, test[1].pair_id);
    }
  }
  EXPECT_EQ(g.records[0].pair_id, test[0].pair_id);
  EXPECT_EQ(g.records[3].pair_id, test[1].pair_id);
}

TEST(Grid, EightPoemsEightPromptsTwoModels) {
  auto client = make_stub({StubRule::fixed(".", kQuatrain)});
  std::vector<GridCondition> conds;
  for (const char* m : {"gpt-3.5-turbo", "gpt-4-1106-preview"}) {
    for (TemplateId id : {TemplateId::kH1, TemplateId::kH2, TemplateId::kH3, TemplateId::kP1,
                          TemplateId::kP2, TemplateId::kP3, TemplateId::kP4, TemplateId::kP5}) {
      conds.push_back({id, 0, model(m)});
    }
  }
  GridResult g = run_experiment_grid(*client, corpus().pairs, corpus(), conds, 1);
  EXPECT_EQ(g.records.size(), 128u);
  EXPECT_TRUE(g.errors.empty());
}

TEST(Grid, FailingCellIsIsolated) {
  const std::string fog = format_poem(corpus().find("fog").source);
  auto client = make_stub({StubRule{".", [fog](const std::string& p) -> std::string {
    if (p.find(fog) != std::string::npos && p.rfind("Please provide the Chinese translation for these", 0) == 0) {
      throw Error(ErrorCode::kProtocol, "boom");
    }
    return "床前明月光";
  }}});
  std::vector<PoemPair> test = {corpus().find("balance"), corpus().find("fog")};
  std::vector<GridCondition> conds = {
      {TemplateId::kH1, 0, model()}, {TemplateId::kH2, 0, model()}, {TemplateId::kH3, 0, model()}};
  GridResult g = run_experiment_grid(*client, test, corpus(), conds, 1);
  EXPECT_EQ(g.records.size(), 5u);
  ASSERT_EQ(g.errors.size(), 1u);
  EXPECT_EQ(g.errors[0].pair_id, "fog");
  EXPECT_EQ(g.errors[0].template_id, "H1");
  EXPECT_EQ(g.records.size() + g.errors.size(), test.size() * conds.size());
}

TEST(Grid, EmptyConditionsRejected) {
  auto client = make_stub({});
  EXPECT_THROW(run_experiment_grid(*client, corpus().pairs, corpus(), {}, 1), Error);
}

TEST(Grid, ReplayIsDeterministic) {
  std::vector<PoemPair> test = {corpus().find("balance"), corpus().find("fog"),
                                corpus().find("fire_and_ice")};
  std::vector<GridCondition> conds = {{TemplateId::kH2, 0, model()},
                                      {TemplateId::kFewshotGpt4, 1, model()},
                                      {TemplateId::kFewshotGpt4, 3, model()}};
  auto a = replay_client();
  auto b = replay_client();
  GridResult ga = run_experiment_grid(*a, test, corpus(), conds, 20240501);
  GridResult gb = run_experiment_grid(*b, test, corpus(), conds, 20240501);
  ASSERT_EQ(ga.records.size(), gb.records.size());
  for (std::size_t i = 0; i < ga.records.size(); ++i) {
    EXPECT_EQ(ga.records[i].to_json(), gb.records[i].to_json());
  }
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 8, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 4, [](std::size_t i) {
                 if (i == 3) throw std::runtime_error("x");
               }),
               std::runtime_error);
}
