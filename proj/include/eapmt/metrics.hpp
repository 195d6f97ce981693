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
#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace eapmt {

enum class Tokenizer { k13a, kZh };
enum class Smoothing { kNone, kExp };

std::string_view tokenizer_name(Tokenizer tok);
Tokenizer parse_tokenizer(std::string_view name);

inline constexpr int kMaxNgramOrder = 4;

struct BleuConfig {
  Smoothing smoothing = Smoothing::kExp;
  Tokenizer tokenizer = Tokenizer::k13a;
  bool lowercase = false;
  // Restricts the geometric mean to orders the hypothesis has n-grams for.
  // sentence_bleu always enables it, as the reference tool does.
  bool effective_order = false;

  // e.g. "nrefs:1|case:mixed|eff:no|tok:zh|smooth:exp|version:eapmt-1.0"
  std::string signature() const;
};

// Default configuration for a given target language: zh tokenizer for Chinese.
BleuConfig bleu_config_for_chinese();
BleuConfig bleu_config_for_english();

struct BleuScore {
  double score = 0.0;  // 0..100
  std::array<double, kMaxNgramOrder> precisions{};
  std::array<std::int64_t, kMaxNgramOrder> correct{};
  std::array<std::int64_t, kMaxNgramOrder> total{};
  double brevity_penalty = 1.0;
  std::int64_t sys_len = 0;
  std::int64_t ref_len = 0;
  std::string signature;

  // "12.3" style, one decimal.
  std::string formatted() const;
};

// Tokenization compatible with the reference BLEU tool's 13a and zh tokenizers.
std::vector<std::string> tokenize(std::string_view text, Tokenizer tokenizer);

BleuScore corpus_bleu(const std::vector<std::string>& hypotheses,
                      const std::vector<std::string>& references, const BleuConfig& config);

BleuScore sentence_bleu(std::string_view hypothesis, std::string_view reference,
                        BleuConfig config);

// Scores from sufficient statistics, exposed for aggregation and tests.
BleuScore compute_bleu(const std::array<std::int64_t, kMaxNgramOrder>& correct,
                       const std::array<std::int64_t, kMaxNgramOrder>& total,
                       std::int64_t sys_len, std::int64_t ref_len, Smoothing smoothing,
                       bool effective_order);

struct AdapterPair {
  std::string hyp;
  std::string ref;
  std::string src;
};

// External neural metric (BERTScore, COMET, ...).
class MetricAdapter {
 public:
  virtual ~MetricAdapter() = default;
  virtual std::string name() const = 0;
  // Raw reply scores; validation happens in score_with_adapter.
  virtual std::vector<double> score(const std::vector<AdapterPair>& pairs) = 0;
};

// POSTs {"pairs":[{"hyp","ref","src"}]} to the endpoint and reads {"scores":[...]}.
class HttpMetricAdapter : public MetricAdapter {
 public:
  HttpMetricAdapter(std::string name, std::string endpoint,
                    std::chrono::seconds timeout = std::chrono::seconds(300));
  std::string name() const override { return name_; }
  std::vector<double> score(const std::vector<AdapterPair>& pairs) override;

 private:
  std::string name_;
  std::string endpoint_;
  std::chrono::seconds timeout_;
};

std::vector<double> score_with_adapter(MetricAdapter& adapter,
                                       const std::vector<std::string>& hypotheses,
                                       const std::vector<std::string>& references,
                                       const std::vector<std::string>& sources = {});

struct ScoreRow {
  std::string system;
  std::string metric;
  std::string signature;
  double score = 0.0;
};

// scores.csv: system,metric,signature,score
std::string scores_csv(const std::vector<ScoreRow>& rows);

}  // namespace eapmt
