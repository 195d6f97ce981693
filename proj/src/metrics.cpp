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

#include "eapmt/metrics.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <unordered_map>

#include "detail.hpp"
#include "eapmt/csv.hpp"
#include "eapmt/error.hpp"
#include "eapmt/unicode.hpp"
#include "httplib.h"

namespace eapmt {

using detail::json;

std::string_view tokenizer_name(Tokenizer tok) { return tok == Tokenizer::kZh ? "zh" : "13a"; }

Tokenizer parse_tokenizer(std::string_view name) {
  if (name == "13a" || name == "t13a") return Tokenizer::k13a;
  if (name == "zh") return Tokenizer::kZh;
  throw Error(ErrorCode::kInvalidArgument, "unknown tokenizer '" + std::string(name) + "'");
}

std::string BleuConfig::signature() const {
  std::string s = "nrefs:1|case:";
  s += lowercase ? "lc" : "mixed";
  s += "|eff:";
  s += effective_order ? "yes" : "no";
  s += "|tok:";
  s += tokenizer_name(tokenizer);
  s += "|smooth:";
  s += smoothing == Smoothing::kExp ? "exp" : "none";
  s += "|version:eapmt-1.0";
  return s;
}

BleuConfig bleu_config_for_chinese() {
  BleuConfig c;
  c.tokenizer = Tokenizer::kZh;
  return c;
}

BleuConfig bleu_config_for_english() { return BleuConfig{}; }

std::string BleuScore::formatted() const { return detail::format_fixed(score, 1); }

namespace {

bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_period_or_comma(char32_t c) { return c == U'.' || c == U','; }

bool is_split_punct(char32_t c) {
  return (c >= 0x7B && c <= 0x7E) || (c >= 0x5B && c <= 0x60) || (c >= 0x20 && c <= 0x26) ||
         (c >= 0x28 && c <= 0x2B) || (c >= 0x3A && c <= 0x40) || c == 0x2F;
}

// Two-character pattern substitution with the scanning behaviour of re.sub:
// matches are non-overlapping and searched left to right.
template <typename First, typename Second, typename Emit>
std::u32string sub_pairs(const std::u32string& s, First first, Second second, Emit emit) {
  std::u32string out;
  out.reserve(s.size() + s.size() / 2);
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && first(s[i]) && second(s[i + 1])) {
      emit(out, s[i], s[i + 1]);
      i += 2;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

std::vector<std::string> regexp_tokenize(std::u32string line) {
  std::u32string spaced;
  spaced.reserve(line.size() * 2);
  for (char32_t c : line) {
    if (is_split_punct(c)) {
      spaced.push_back(U' ');
      spaced.push_back(c);
      spaced.push_back(U' ');
    } else {
      spaced.push_back(c);
    }
  }
  auto not_digit = [](char32_t c) { return !is_ascii_digit(c); };
  spaced = sub_pairs(spaced, not_digit, is_period_or_comma,
                     [](std::u32string& o, char32_t a, char32_t b) {
                       o.push_back(a);
                       o.push_back(U' ');
                       o.push_back(b);
                       o.push_back(U' ');
                     });
  spaced = sub_pairs(spaced, is_period_or_comma, not_digit,
                     [](std::u32string& o, char32_t a, char32_t b) {
                       o.push_back(U' ');
                       o.push_back(a);
                       o.push_back(U' ');
                       o.push_back(b);
                     });
  spaced = sub_pairs(spaced, is_ascii_digit, [](char32_t c) { return c == U'-'; },
                     [](std::u32string& o, char32_t a, char32_t b) {
                       o.push_back(a);
                       o.push_back(U' ');
                       o.push_back(b);
                       o.push_back(U' ');
                     });
  std::vector<std::string> tokens;
  std::string current;
  for (char32_t c : spaced) {
    if (unicode::is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      unicode::append_utf8(current, c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::u32string strip(std::u32string s, bool left) {
  std::size_t e = s.size();
  while (e > 0 && unicode::is_space(s[e - 1])) --e;
  std::size_t b = 0;
  if (left) {
    while (b < e && unicode::is_space(s[b])) ++b;
  }
  return s.substr(b, e - b);
}

using NgramCounts = std::unordered_map<std::string, std::int64_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens) {
  NgramCounts counts;
  for (int n = 1; n <= kMaxNgramOrder; ++n) {
    if (tokens.size() < static_cast<std::size_t>(n)) break;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key;
      for (int k = 0; k < n; ++k) {
        if (k) key.push_back('\x1f');  // never part of a token: it is whitespace
        key += tokens[i + k];
      }
      ++counts[key];
    }
  }
  return counts;
}

int ngram_order(const std::string& key) {
  int n = 1;
  for (char c : key) n += (c == '\x1f');
  return n;
}

struct SegmentStats {
  std::int64_t sys_len = 0;
  std::int64_t ref_len = 0;
  std::array<std::int64_t, kMaxNgramOrder> correct{};
  std::array<std::int64_t, kMaxNgramOrder> total{};
};

std::vector<std::string> preprocess(std::string_view text, const BleuConfig& config) {
  std::string s = config.lowercase ? unicode::to_lower(text) : std::string(text);
  std::u32string stripped = strip(unicode::decode(s), /*left=*/false);
  return tokenize(unicode::encode(stripped), config.tokenizer);
}

SegmentStats segment_stats(std::string_view hyp, std::string_view ref, const BleuConfig& config) {
  auto hyp_tokens = preprocess(hyp, config);
  auto ref_tokens = preprocess(ref, config);
  NgramCounts hyp_counts = count_ngrams(hyp_tokens);
  NgramCounts ref_counts = count_ngrams(ref_tokens);
  SegmentStats st;
  st.sys_len = static_cast<std::int64_t>(hyp_tokens.size());
  st.ref_len = static_cast<std::int64_t>(ref_tokens.size());
  for (const auto& [ngram, count] : hyp_counts) {
    int n = ngram_order(ngram) - 1;
    st.total[n] += count;
    if (auto it = ref_counts.find(ngram); it != ref_counts.end()) {
      st.correct[n] += std::min(count, it->second);
    }
  }
  return st;
}

double safe_log(double x) { return x == 0.0 ? -9999999999.0 : std::log(x); }

}  // namespace

std::vector<std::string> tokenize(std::string_view text, Tokenizer tokenizer) {
  if (tokenizer == Tokenizer::k13a) {
    std::string line(text);
    replace_all(line, "<skipped>", "");
    replace_all(line, "-\n", "");
    replace_all(line, "\n", " ");
    if (line.find('&') != std::string::npos) {
      replace_all(line, "&quot;", "\"");
      replace_all(line, "&amp;", "&");
      replace_all(line, "&lt;", "<");
      replace_all(line, "&gt;", ">");
    }
    return regexp_tokenize(unicode::decode(" " + line + " "));
  }
  std::u32string stripped = strip(unicode::decode(text), /*left=*/true);
  std::u32string spaced;
  spaced.reserve(stripped.size() * 3);
  for (char32_t c : stripped) {
    if (unicode::is_zh_token_char(c)) {
      spaced.push_back(U' ');
      spaced.push_back(c);
      spaced.push_back(U' ');
    } else {
      spaced.push_back(c);
    }
  }
  return regexp_tokenize(std::move(spaced));
}

BleuScore compute_bleu(const std::array<std::int64_t, kMaxNgramOrder>& correct,
                       const std::array<std::int64_t, kMaxNgramOrder>& total,
                       std::int64_t sys_len, std::int64_t ref_len, Smoothing smoothing,
                       bool effective_order) {
  BleuScore out;
  out.correct = correct;
  out.total = total;
  out.sys_len = sys_len;
  out.ref_len = ref_len;
  out.brevity_penalty = 1.0;
  if (sys_len < ref_len) {
    out.brevity_penalty =
        sys_len > 0 ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(sys_len))
                    : 0.0;
  }
  bool any_correct = false;
  for (auto c : correct) any_correct = any_correct || c != 0;
  if (!any_correct) {
    out.score = 0.0;
    return out;
  }
  double smooth = 1.0;
  int eff_order = kMaxNgramOrder;
  for (int n = 1; n <= kMaxNgramOrder; ++n) {
    if (total[n - 1] == 0) break;
    if (effective_order) eff_order = n;
    if (correct[n - 1] == 0) {
      if (smoothing == Smoothing::kExp) {
        smooth *= 2.0;
        out.precisions[n - 1] = 100.0 / (smooth * static_cast<double>(total[n - 1]));
      }
    } else {
      out.precisions[n - 1] =
          100.0 * static_cast<double>(correct[n - 1]) / static_cast<double>(total[n - 1]);
    }
  }
  double log_sum = 0.0;
  for (int n = 0; n < eff_order; ++n) log_sum += safe_log(out.precisions[n]);
  out.score = out.brevity_penalty * std::exp(log_sum / eff_order);
  return out;
}

BleuScore corpus_bleu(const std::vector<std::string>& hypotheses,
                      const std::vector<std::string>& references, const BleuConfig& config) {
  if (hypotheses.size() != references.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "hypothesis/reference count mismatch: " + std::to_string(hypotheses.size()) +
                    " vs " + std::to_string(references.size()));
  }
  if (hypotheses.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "BLEU needs at least one segment");
  }
  SegmentStats sum;
  bool saw_cjk_reference = false;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    SegmentStats st = segment_stats(hypotheses[i], references[i], config);
    sum.sys_len += st.sys_len;
    sum.ref_len += st.ref_len;
    for (int n = 0; n < kMaxNgramOrder; ++n) {
      sum.correct[n] += st.correct[n];
      sum.total[n] += st.total[n];
    }
    if (config.tokenizer != Tokenizer::kZh && !saw_cjk_reference) {
      saw_cjk_reference = unicode::contains_han(references[i]);
    }
  }
  if (saw_cjk_reference) {
    spdlog::warn("references contain CJK characters but the {} tokenizer is in use",
                 tokenizer_name(config.tokenizer));
  }
  if (sum.sys_len == 0) spdlog::warn("all hypotheses are empty; BLEU is 0");
  BleuScore score = compute_bleu(sum.correct, sum.total, sum.sys_len, sum.ref_len,
                                 config.smoothing, config.effective_order);
  score.signature = config.signature();
  return score;
}

BleuScore sentence_bleu(std::string_view hypothesis, std::string_view reference, BleuConfig config) {
  config.smoothing = Smoothing::kExp;
  config.effective_order = true;
  SegmentStats st = segment_stats(hypothesis, reference, config);
  BleuScore score =
      compute_bleu(st.correct, st.total, st.sys_len, st.ref_len, config.smoothing, true);
  score.signature = config.signature();
  return score;
}

HttpMetricAdapter::HttpMetricAdapter(std::string name, std::string endpoint,
                                     std::chrono::seconds timeout)
    : name_(std::move(name)), endpoint_(std::move(endpoint)), timeout_(timeout) {}

std::vector<double> HttpMetricAdapter::score(const std::vector<AdapterPair>& pairs) {
  auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "adapter endpoint needs a scheme: " + endpoint_);
  }
  auto path_start = endpoint_.find('/', scheme_end + 3);
  std::string host = endpoint_.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  json body;
  body["pairs"] = json::array();
  for (const auto& p : pairs) body["pairs"].push_back({{"hyp", p.hyp}, {"ref", p.ref}, {"src", p.src}});

  httplib::Client cli(host);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kNetwork,
                name_ + " adapter unreachable at " + endpoint_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kNetwork, name_ + " adapter returned HTTP " + std::to_string(res->status));
  }
  try {
    json reply = json::parse(res->body);
    std::vector<double> scores;
    for (const auto& v : reply.at("scores")) scores.push_back(v.get<double>());
    return scores;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, name_ + " adapter reply malformed: " + e.what());
  }
}

std::vector<double> score_with_adapter(MetricAdapter& adapter,
                                       const std::vector<std::string>& hypotheses,
                                       const std::vector<std::string>& references,
                                       const std::vector<std::string>& sources) {
  if (hypotheses.empty()) throw Error(ErrorCode::kInvalidArgument, "adapter batch is empty");
  if (hypotheses.size() != references.size() ||
      (!sources.empty() && sources.size() != hypotheses.size())) {
    throw Error(ErrorCode::kInvalidArgument, "adapter batch columns differ in length");
  }
  std::vector<AdapterPair> pairs;
  pairs.reserve(hypotheses.size());
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    pairs.push_back({hypotheses[i], references[i], sources.empty() ? std::string() : sources[i]});
  }
  std::vector<double> scores = adapter.score(pairs);
  if (scores.size() != pairs.size()) {
    throw Error(ErrorCode::kProtocol, adapter.name() + " returned " + std::to_string(scores.size()) +
                                          " scores for " + std::to_string(pairs.size()) + " pairs");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::kProtocol, adapter.name() + " returned a non-finite score");
  }
  return scores;
}

std::string scores_csv(const std::vector<ScoreRow>& rows) {
  std::string out = csv::row({"system", "metric", "signature", "score"});
  for (const auto& r : rows) {
    out += csv::row({r.system, r.metric, r.signature, detail::format_fixed(r.score, 4)});
  }
  return out;
}

}  // namespace eapmt
