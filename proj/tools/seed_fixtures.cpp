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

// Regenerates fixtures/cache by running the fixture experiment in record mode
// against canned responses.
//
//   seed_fixtures <fixtures-dir> <balance-texts-dir>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <regex>
#include <string>
#include <vector>

#include "../tests/support/experiment.hpp"
#include "detail.hpp"
#include "eapmt/corpus.hpp"
#include "eapmt/evaluation.hpp"
#include "eapmt/llm_client.hpp"
#include "eapmt/prompts.hpp"

namespace fs = std::filesystem;
using namespace eapmt;

namespace {

std::vector<std::string> codepoints(const std::string& s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t n = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    out.push_back(s.substr(i, n));
    i += n;
  }
  return out;
}

class FixtureBackend : public ChatBackend {
 public:
  FixtureBackend(Corpus corpus, fs::path texts) : corpus_(std::move(corpus)), texts_(std::move(texts)) {}

  ChatResponse send(const ModelSpec& model, std::string_view prompt_view) override {
    const std::string prompt(prompt_view);
    const bool gpt4 = model.name.rfind("gpt-4", 0) == 0;
    const std::string h = detail::sha256_hex(model.name + '\0' + prompt);
    ChatResponse r;
    if (prompt.rfind("Please evaluate the following", 0) == 0) {
      r.text = judge(prompt, h);
    } else if (prompt.rfind("Please continue writing", 0) == 0 || prompt.rfind("请续写", 0) == 0) {
      r.text = continuation(prompt, gpt4);
    } else if (prompt.rfind("Please provide an explanation", 0) == 0) {
      const PoemPair& pair = target(prompt);
      r.text = pair.pair_id == "balance" && gpt4 ? text("explanation_gpt4.txt")
                                                 : explanation(pair);
    } else {
      const PoemPair& pair = target(prompt);
      const bool step2 = prompt.find("based on its explanation") != std::string::npos;
      if (pair.pair_id == "balance" && step2) {
        r.text = text(gpt4 ? "eapmt_gpt4.txt" : "eapmt_gpt35.txt");
      } else if (pair.pair_id == "balance" && gpt4 && prompt == plain(TemplateId::kH2, pair)) {
        r.text = text("best_gpt4_h2.txt");
      } else if (pair.pair_id == "balance" && !gpt4 && prompt == plain(TemplateId::kH3, pair)) {
        r.text = text("best_gpt35_h3.txt");
      } else {
        r.text = variant(pair.reference, h);
      }
    }
    r.usage.prompt_tokens = static_cast<std::int64_t>(prompt.size() / 4);
    r.usage.completion_tokens = static_cast<std::int64_t>(r.text.size() / 4);
    r.usage.total_tokens = r.usage.prompt_tokens + r.usage.completion_tokens;
    return r;
  }

 private:
  static std::string plain(TemplateId id, const PoemPair& pair) {
    return render(get_template(id), {{"poem", format_poem(pair.source)}}).final_text;
  }

  std::string text(const char* name) const { return detail::read_file(texts_ / name); }

  // The poem being translated is the one whose text appears last in the prompt.
  const PoemPair& target(const std::string& prompt) const {
    const PoemPair* best = nullptr;
    std::size_t best_pos = 0;
    for (const auto& p : corpus_.pairs) {
      std::size_t pos = prompt.rfind(format_poem(p.source));
      if (pos != std::string::npos && (!best || pos > best_pos)) {
        best = &p;
        best_pos = pos;
      }
    }
    if (!best) throw Error(ErrorCode::kNotFound, "no fixture poem in prompt");
    return *best;
  }

  std::string continuation(const std::string& prompt, bool gpt4) const {
    const bool en = prompt.rfind("Please", 0) == 0;
    std::smatch m;
    std::regex count_re(en ? "next (\\d+) lines" : "接下来的(\\d+)行");
    std::regex_search(prompt, m, count_re);
    const std::size_t n = std::stoul(m[1].str());
    for (const auto& p : corpus_.pairs) {
      const Poem& poem = en ? p.source : p.reference;
      const std::string quoted = en ? "\"" + poem.title + "\"" : "“" + poem.title + "”";
      if (prompt.find(quoted) == std::string::npos) continue;
      if (p.pair_id == "balance" && en && gpt4 && n == 6) return text("continuation_gpt4.txt");
      std::vector<std::string> lines = poem.content_lines();
      std::vector<std::string> suffix(lines.end() - static_cast<std::ptrdiff_t>(n), lines.end());
      std::reverse(suffix.begin(), suffix.end());
      suffix[0] = en ? "and the light goes on without us" : "光没有等我们就走了";
      return format_lines(suffix);
    }
    throw Error(ErrorCode::kNotFound, "no fixture poem matches the continuation prompt");
  }

  static std::string explanation(const PoemPair& pair) {
    const auto lines = pair.source.content_lines();
    return "\"" + pair.source.title + "\" is a short poem by " + pair.source.author +
           ". It opens with \"" + lines.front() + "\" and closes with \"" + lines.back() +
           "\", turning a small scene into a reflection on change.";
  }

  static std::string variant(const Poem& reference, const std::string& h) {
    std::string out = reference.title + "\n";
    std::size_t i = 0;
    for (const auto& line : reference.lines) {
      out += "\n";
      if (line.empty()) continue;
      auto cps = codepoints(line);
      unsigned d = static_cast<unsigned>(std::stoul(h.substr((i * 2) % 60, 2), nullptr, 16));
      if (d % 3 == 0 && cps.size() > 2) cps.erase(cps.begin() + static_cast<std::ptrdiff_t>(d % cps.size()));
      if (d % 3 == 1 && cps.size() > 2) std::swap(cps[0], cps[1]);
      for (const auto& c : cps) out += c;
      ++i;
    }
    return out;
  }

  static std::string judge(const std::string& prompt, const std::string& h) {
    static const std::regex cand_re("Candidate translation (\\d+):");
    int count = 0;
    for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), cand_re);
         it != std::sregex_iterator(); ++it) {
      ++count;
    }
    JudgeBlock block;
    std::size_t k = 0;
    for (int c = 1; c <= count; ++c) {
      for (Criterion cr : all_criteria()) {
        unsigned d = static_cast<unsigned>(std::stoul(h.substr(k % 62, 2), nullptr, 16));
        block[c][cr] = 2 + static_cast<int>(d % 5);
        ++k;
      }
    }
    return "Here are the scores.\n" + serialize_judge_block(block);
  }

  Corpus corpus_;
  fs::path texts_;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: seed_fixtures <fixtures-dir> <balance-texts-dir>\n";
    return 2;
  }
  try {
    const fs::path fixtures = fs::absolute(argv[1]);
    const fs::path cache = fixtures / "cache";
    fs::remove_all(cache);
    fs::create_directories(cache);

    ClientOptions options;
    options.mode = ClientMode::kRecord;
    options.cache_dir = cache;
    options.parallelism = 4;
    LlmClient client(
        std::make_shared<FixtureBackend>(load_corpus(fixtures / "corpus.jsonl"), fs::absolute(argv[2])),
        options);

    const fs::path scratch = fs::temp_directory_path() / "eapmt-seed-fixtures";
    fs::remove_all(scratch);
    auto steps = testing::run_experiment(fixtures, scratch, ClientMode::kRecord, &client);
    for (const auto& s : steps) {
      std::cout << s.name << ": " << s.result["errors"].dump() << " errors\n";
    }
    std::cout << "backend calls: " << client.backend_calls() << "\n";
    fs::remove_all(scratch);
  } catch (const std::exception& e) {
    std::cerr << "seed_fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
