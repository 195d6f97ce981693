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

#include "eapmt/eapmt.h"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "eapmt/corpus.hpp"
#include "eapmt/error.hpp"
#include "eapmt/llm_client.hpp"
#include "eapmt/metrics.hpp"
#include "eapmt/prompts.hpp"
#include "eapmt/run.hpp"
#include "json.hpp"

struct eapmt_corpus {
  eapmt::Corpus corpus;
};

struct eapmt_client {
  std::unique_ptr<eapmt::LlmClient> client;
};

namespace {

using json = nlohmann::ordered_json;

thread_local std::string g_last_error;

static_assert(static_cast<int>(eapmt::ErrorCode::kRaggedGrid) == EAPMT_ERR_RAGGED_GRID);
static_assert(static_cast<int>(eapmt::ErrorCode::kInternal) == EAPMT_ERR_INTERNAL);

template <typename Fn>
eapmt_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return EAPMT_OK;
  } catch (const eapmt::Error& e) {
    g_last_error = e.what();
    return static_cast<eapmt_status>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EAPMT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return EAPMT_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw eapmt::Error(eapmt::ErrorCode::kInvalidArgument, std::string(name) + " is NULL");
}

char* copy_out(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

eapmt::BleuConfig bleu_config(const char* tokenizer) {
  eapmt::BleuConfig cfg;
  cfg.tokenizer = eapmt::parse_tokenizer(tokenizer ? tokenizer : "13a");
  return cfg;
}

}  // namespace

extern "C" {

const char* eapmt_version(void) { return "1.0.0"; }

const char* eapmt_status_name(eapmt_status status) {
  if (status == EAPMT_OK) return "ok";
  return eapmt::error_code_name(static_cast<eapmt::ErrorCode>(status));
}

const char* eapmt_last_error(void) { return g_last_error.c_str(); }

void eapmt_string_free(char* s) { std::free(s); }

eapmt_status eapmt_set_log_level(const char* level) {
  return guarded([&] {
    require(level, "level");
    auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && std::strcmp(level, "off") != 0) {
      throw eapmt::Error(eapmt::ErrorCode::kInvalidArgument,
                         std::string("unknown log level '") + level + "'");
    }
    spdlog::set_level(lvl);
  });
}

eapmt_status eapmt_corpus_load(const char* path, eapmt_corpus** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto c = std::make_unique<eapmt_corpus>();
    c->corpus = eapmt::load_corpus(path);
    *out = c.release();
  });
}

void eapmt_corpus_free(eapmt_corpus* corpus) { delete corpus; }

eapmt_status eapmt_corpus_stats(const eapmt_corpus* corpus, uint64_t* poems, uint64_t* lines,
                                uint64_t* tokens) {
  return guarded([&] {
    require(corpus, "corpus");
    eapmt::CorpusStats s = eapmt::corpus_stats(corpus->corpus);
    if (poems) *poems = s.poems;
    if (lines) *lines = s.lines;
    if (tokens) *tokens = s.tokens;
  });
}

eapmt_status eapmt_corpus_warnings(const eapmt_corpus* corpus, char** out_json) {
  return guarded([&] {
    require(corpus, "corpus");
    require(out_json, "out_json");
    *out_json = copy_out(json(corpus->corpus.warnings).dump());
  });
}

eapmt_status eapmt_template_names(char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    json names = json::array();
    for (auto id : eapmt::all_template_ids()) names.push_back(eapmt::template_name(id));
    *out_json = copy_out(names.dump());
  });
}

eapmt_status eapmt_template_text(const char* template_id, char** out) {
  return guarded([&] {
    require(template_id, "template_id");
    require(out, "out");
    *out = copy_out(eapmt::get_template(eapmt::parse_template_id(template_id)).text);
  });
}

eapmt_status eapmt_template_render(const char* template_id, const char* bindings_json,
                                   char** out) {
  return guarded([&] {
    require(template_id, "template_id");
    require(out, "out");
    eapmt::Bindings bindings;
    if (bindings_json) {
      json j = json::parse(bindings_json, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw eapmt::Error(eapmt::ErrorCode::kInvalidArgument, "bindings must be a JSON object");
      }
      for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) {
          throw eapmt::Error(eapmt::ErrorCode::kInvalidArgument, "binding '" + k + "' is not a string");
        }
        bindings[k] = v.get<std::string>();
      }
    }
    const auto& tmpl = eapmt::get_template(eapmt::parse_template_id(template_id));
    *out = copy_out(eapmt::render(tmpl, bindings).final_text);
  });
}

eapmt_status eapmt_templates_export(const char* dir) {
  return guarded([&] {
    require(dir, "dir");
    eapmt::export_templates(dir);
  });
}

eapmt_status eapmt_bleu_corpus(const char* const* hypotheses, const char* const* references,
                               size_t count, const char* tokenizer, int lowercase, double* score,
                               char** signature) {
  return guarded([&] {
    require(hypotheses, "hypotheses");
    require(references, "references");
    require(score, "score");
    std::vector<std::string> hyps;
    std::vector<std::string> refs;
    for (size_t i = 0; i < count; ++i) {
      require(hypotheses[i], "hypothesis");
      require(references[i], "reference");
      hyps.emplace_back(hypotheses[i]);
      refs.emplace_back(references[i]);
    }
    eapmt::BleuConfig cfg = bleu_config(tokenizer);
    cfg.lowercase = lowercase != 0;
    eapmt::BleuScore s = eapmt::corpus_bleu(hyps, refs, cfg);
    *score = s.score;
    if (signature) *signature = copy_out(s.signature);
  });
}

eapmt_status eapmt_bleu_sentence(const char* hypothesis, const char* reference,
                                 const char* tokenizer, double* score) {
  return guarded([&] {
    require(hypothesis, "hypothesis");
    require(reference, "reference");
    require(score, "score");
    *score = eapmt::sentence_bleu(hypothesis, reference, bleu_config(tokenizer)).score;
  });
}

eapmt_status eapmt_client_create(const char* config_json, eapmt_client** out) {
  return guarded([&] {
    require(out, "out");
    eapmt::run::RunConfig cfg = eapmt::run::config_from_json(config_json ? config_json : "{}");
    cfg.validate();
    auto c = std::make_unique<eapmt_client>();
    c->client = eapmt::run::make_client(cfg);
    *out = c.release();
  });
}

eapmt_status eapmt_client_create_stub(const char* rules_json, const char* cache_dir,
                                      eapmt_client** out) {
  return guarded([&] {
    require(rules_json, "rules_json");
    require(out, "out");
    json j = json::parse(rules_json, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
      throw eapmt::Error(eapmt::ErrorCode::kInvalidArgument, "stub rules must be a JSON array");
    }
    std::vector<eapmt::StubRule> rules;
    try {
      for (const auto& r : j) {
        rules.push_back(eapmt::StubRule::fixed(r.at("pattern").get<std::string>(),
                                               r.at("response").get<std::string>()));
      }
    } catch (const json::exception& e) {
      throw eapmt::Error(eapmt::ErrorCode::kInvalidArgument,
                         std::string("malformed stub rule: ") + e.what());
    }
    std::optional<std::filesystem::path> cache;
    if (cache_dir) cache = cache_dir;
    auto c = std::make_unique<eapmt_client>();
    c->client = eapmt::make_stub(std::move(rules), cache);
    *out = c.release();
  });
}

void eapmt_client_free(eapmt_client* client) { delete client; }

eapmt_status eapmt_client_complete(eapmt_client* client, const char* model_json,
                                   const char* prompt, char** out) {
  return guarded([&] {
    require(client, "client");
    require(model_json, "model_json");
    require(prompt, "prompt");
    require(out, "out");
    eapmt::ModelSpec model;
    json j = json::parse(model_json, nullptr, false);
    if (j.is_discarded()) {
      model.name = model_json;
    } else {
      eapmt::run::RunConfig cfg =
          eapmt::run::config_from_json(json{{"models", json::array({j})}}.dump());
      model = cfg.models.front();
    }
    model.validate();
    *out = copy_out(client->client->complete_text(model, prompt));
  });
}

eapmt_status eapmt_client_backend_calls(const eapmt_client* client, uint64_t* calls) {
  return guarded([&] {
    require(client, "client");
    require(calls, "calls");
    *calls = client->client->backend_calls();
  });
}

eapmt_status eapmt_run(const char* command, const char* config_json, const char* request_json,
                       eapmt_client* client, char** result_json) {
  return guarded([&] {
    require(command, "command");
    require(config_json, "config_json");
    require(result_json, "result_json");
    eapmt::run::RunConfig cfg = eapmt::run::config_from_json(config_json);
    *result_json = copy_out(eapmt::run::execute(command, cfg, request_json ? request_json : "{}",
                                                client ? client->client.get() : nullptr));
  });
}

}  // extern "C"
