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

#include <algorithm>
#include <filesystem>
#include <random>

#include "detail.hpp"
#include "eapmt/error.hpp"
#include "eapmt/metrics.hpp"
#include "eapmt/unicode.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace eapmt;
using nlohmann::json;

namespace {

const json& oracle() {
  static const json j =
      json::parse(detail::read_file(fs::path(EAPMT_TEST_DIR) / "data/bleu_oracle.json"));
  return j;
}

BleuConfig config_for(const json& c) {
  BleuConfig cfg;
  cfg.tokenizer = parse_tokenizer(c["tokenizer"].get<std::string>());
  cfg.lowercase = c["lowercase"].get<bool>();
  return cfg;
}

class ConstantAdapter : public MetricAdapter {
 public:
  ConstantAdapter(double v, int extra = 0) : v_(v), extra_(extra) {}
  std::string name() const override { return "const"; }
  std::vector<double> score(const std::vector<AdapterPair>& pairs) override {
    return std::vector<double>(pairs.size() + extra_, v_);
  }

 private:
  double v_;
  int extra_;
};

std::vector<std::string> random_corpus(std::mt19937_64& rng, std::size_t n) {
  static const std::vector<std::string> vocab = {"白", "鹤", "水", "镜", "风", "the", "crane",
                                                 "water", "mirror", ",", "light", "月"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    const std::size_t len = 1 + rng() % 12;
    for (std::size_t k = 0; k < len; ++k) s += vocab[rng() % vocab.size()] + " ";
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Tokenize, ZhSplitsCjkPerCharacter) {
  EXPECT_EQ(tokenize("白鹤停泊", Tokenizer::kZh), (std::vector<std::string>{"白", "鹤", "停", "泊"}));
  EXPECT_EQ(tokenize("BLEU是metric", Tokenizer::kZh),
            (std::vector<std::string>{"BLEU", "是", "metric"}));
}

TEST(Tokenize, International13a) {
  EXPECT_EQ(tokenize("It is, she knows,", Tokenizer::k13a),
            (std::vector<std::string>{"It", "is", ",", "she", "knows", ","}));
}

TEST(Tokenize, MatchesReferenceToolExamples) {
  for (const auto& [name, examples] : oracle()["tokenizer_examples"].items()) {
    for (const auto& ex : examples) {
      EXPECT_EQ(tokenize(ex["text"].get<std::string>(), parse_tokenizer(name)),
                ex["tokens"].get<std::vector<std::string>>())
          << name << ": " << ex["text"];
    }
  }
}

TEST(Bleu, MatchesReferenceToolOnEveryOracleCase) {
  const double tol = oracle()["tolerance"].get<double>();
  std::size_t random_cases = 0;
  for (const auto& c : oracle()["cases"]) {
    const auto hyps = c["hypotheses"].get<std::vector<std::string>>();
    const auto refs = c["references"].get<std::vector<std::string>>();
    BleuScore s = c["kind"] == "sentence" ? sentence_bleu(hyps[0], refs[0], config_for(c))
                                          : corpus_bleu(hyps, refs, config_for(c));
    const std::string name = c["name"].get<std::string>();
    EXPECT_NEAR(s.score, c["score"].get<double>(), tol) << name;
    EXPECT_EQ(s.sys_len, c["sys_len"].get<std::int64_t>()) << name;
    EXPECT_EQ(s.ref_len, c["ref_len"].get<std::int64_t>()) << name;
    for (int n = 0; n < kMaxNgramOrder; ++n) {
      EXPECT_EQ(s.correct[n], c["counts"][n].get<std::int64_t>()) << name;
      EXPECT_EQ(s.total[n], c["totals"][n].get<std::int64_t>()) << name;
    }
    if (name.rfind("random-", 0) == 0) ++random_cases;
  }
  EXPECT_GE(random_cases, 20u);
}

TEST(Bleu, IdentityIsHundred) {
  const std::vector<std::string> x = {"白鹤以一脚站立", "the crane stands"};
  EXPECT_EQ(detail::format_fixed(corpus_bleu(x, x, bleu_config_for_chinese()).score, 2), "100.00");
  EXPECT_EQ(corpus_bleu(x, x, bleu_config_for_chinese()).formatted(), "100.0");
  EXPECT_EQ(detail::format_fixed(sentence_bleu("a b c d e", "a b c d e", {}).score, 2), "100.00");
}

TEST(Bleu, DisjointAndEmptyAreZero) {
  EXPECT_EQ(corpus_bleu({"甲乙丙"}, {"丁戊己"}, bleu_config_for_chinese()).score, 0.0);
  EXPECT_EQ(sentence_bleu("", "a b c", {}).score, 0.0);
  EXPECT_EQ(corpus_bleu({"", ""}, {"a", "b"}, {}).score, 0.0);
}

TEST(Bleu, LengthMismatchIsError) {
  EXPECT_THROW(corpus_bleu({"a"}, {"a", "b"}, {}), Error);
  EXPECT_THROW(corpus_bleu({}, {}, {}), Error);
}

TEST(Bleu, ScoreIsBrevityTimesGeometricMean) {
  BleuScore s = corpus_bleu({"the crane stands on one leg", "water is a mirror"},
                            {"the white crane stands on one leg", "the water is a mirror"}, {});
  double log_sum = 0;
  for (double p : s.precisions) log_sum += std::log(p / 100.0);
  EXPECT_NEAR(s.score, 100.0 * s.brevity_penalty * std::exp(log_sum / kMaxNgramOrder), 1e-9);
  EXPECT_LT(s.brevity_penalty, 1.0);
  EXPECT_GT(s.brevity_penalty, 0.0);
}

TEST(Bleu, SignatureDescribesConfiguration) {
  BleuConfig zh = bleu_config_for_chinese();
  EXPECT_NE(zh.signature().find("tok:zh"), std::string::npos);
  EXPECT_NE(zh.signature().find("smooth:exp"), std::string::npos);
  EXPECT_NE(zh.signature().find("case:mixed"), std::string::npos);
  BleuConfig en = bleu_config_for_english();
  en.lowercase = true;
  EXPECT_NE(en.signature().find("tok:13a"), std::string::npos);
  EXPECT_NE(en.signature().find("case:lc"), std::string::npos);
  EXPECT_NE(zh.signature(), en.signature());
}

TEST(BleuProperty, PermutingTokensNeverRaisesUnigramMatches) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto refs = random_corpus(rng, 1 + rng() % 4);
    auto hyps = random_corpus(rng, refs.size());
    BleuScore base = corpus_bleu(hyps, refs, bleu_config_for_chinese());
    for (auto& h : hyps) {
      auto toks = tokenize(h, Tokenizer::kZh);
      std::shuffle(toks.begin(), toks.end(), rng);
      h = unicode::join(toks, " ");
    }
    BleuScore permuted = corpus_bleu(hyps, refs, bleu_config_for_chinese());
    EXPECT_LE(permuted.correct[0], base.correct[0]);
  }
}

TEST(BleuProperty, ShorteningBelowReferenceLowersBrevityPenalty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto refs = random_corpus(rng, 3);
    std::vector<std::vector<std::string>> toks;
    for (const auto& r : refs) toks.push_back(tokenize(r, Tokenizer::kZh));
    double previous = 2.0;
    for (int keep = 100; keep >= 10; keep -= 30) {
      std::vector<std::string> hyps;
      for (const auto& t : toks) {
        const std::size_t n = std::max<std::size_t>(1, t.size() * keep / 100 - (keep == 100 ? 1 : 0));
        hyps.push_back(unicode::join(std::vector<std::string>(t.begin(), t.begin() + std::min(n, t.size())), " "));
      }
      BleuScore s = corpus_bleu(hyps, refs, bleu_config_for_chinese());
      if (s.sys_len < s.ref_len) {
        EXPECT_LE(s.brevity_penalty, previous);
        previous = s.brevity_penalty;
      }
    }
  }
}

TEST(BleuProperty, BrevityStrictlyDecreasesAsHypothesisShrinks) {
  const std::string ref = "a b c d e f g h i j";
  double previous = 1.0;
  for (int n = 9; n >= 1; --n) {
    std::string hyp;
    for (int i = 0; i < n; ++i) hyp += std::string(1, static_cast<char>('a' + i)) + " ";
    BleuScore s = corpus_bleu({hyp}, {ref}, {});
    EXPECT_LT(s.brevity_penalty, previous);
    previous = s.brevity_penalty;
  }
}

TEST(BleuProperty, IdentityOnRandomCorpora) {
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto x = random_corpus(rng, 1 + rng() % 5);
    BleuScore s = corpus_bleu(x, x, bleu_config_for_chinese());
    if (s.total[kMaxNgramOrder - 1] == 0) continue;
    EXPECT_EQ(detail::format_fixed(s.score, 2), "100.00");
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

// Without any 4-gram the reference tool scores even an exact match as 0.
TEST(Bleu, IdentityWithoutFourGramsFollowsReferenceTool) {
  const std::vector<std::string> x = {"白 鹤", "水"};
  EXPECT_EQ(corpus_bleu(x, x, bleu_config_for_chinese()).score, 0.0);
  EXPECT_EQ(detail::format_fixed(sentence_bleu("白 鹤", "白 鹤", bleu_config_for_chinese()).score, 2),
            "100.00");
}

TEST(Adapter, ConstantStub) {
  ConstantAdapter a(0.5);
  EXPECT_EQ(score_with_adapter(a, {"h1", "h2"}, {"r1", "r2"}), (std::vector<double>{0.5, 0.5}));
}

TEST(Adapter, WrongCountIsProtocolError) {
  ConstantAdapter a(0.5, 1);
  try {
    score_with_adapter(a, {"h1", "h2"}, {"r1", "r2"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
}

TEST(Adapter, EmptyOrRaggedBatchRejected) {
  ConstantAdapter a(0.5);
  EXPECT_THROW(score_with_adapter(a, {}, {}), Error);
  EXPECT_THROW(score_with_adapter(a, {"h"}, {"r", "s"}), Error);
}

TEST(Adapter, UnreachableEndpointIsError) {
  HttpMetricAdapter a("comet", "http://127.0.0.1:1/score", std::chrono::seconds(1));
  try {
    score_with_adapter(a, {"h"}, {"r"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNetwork);
  }
}

TEST(ScoresCsv, HeaderAndRows) {
  EXPECT_EQ(scores_csv({{"EAPMT/gpt-4", "bleu", "tok:zh", 12.5}}),
            "system,metric,signature,score\nEAPMT/gpt-4,bleu,tok:zh,12.5000\n");
}
