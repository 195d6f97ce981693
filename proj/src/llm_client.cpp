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

#include "eapmt/llm_client.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <thread>

#include "detail.hpp"
#include "eapmt/error.hpp"
#include "eapmt/unicode.hpp"
#include "httplib.h"

namespace eapmt {

using detail::json;

void ModelSpec::validate() const {
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "model name must be non-empty");
  if (max_tokens < 1) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "top_p must lie in (0, 1]");
  }
}

std::string cache_key(const ModelSpec& model, std::string_view prompt) {
  json j;
  j["model"] = model.name;
  j["temperature"] = model.temperature;
  j["top_p"] = model.top_p;
  j["max_tokens"] = model.max_tokens;
  j["prompt"] = std::string(prompt);
  return detail::sha256_hex(j.dump());
}

std::string CompletionRecord::to_json() const {
  json j;
  j["cache_key"] = cache_key;
  j["model"] = model;
  j["params"] = {{"temperature", temperature}, {"top_p", top_p}, {"max_tokens", max_tokens}};
  j["prompt"] = prompt;
  j["response"] = response;
  j["timestamp"] = timestamp;
  j["token_usage"] = {{"prompt_tokens", usage.prompt_tokens},
                      {"completion_tokens", usage.completion_tokens},
                      {"total_tokens", usage.total_tokens}};
  return j.dump(2) + "\n";
}

CompletionRecord CompletionRecord::from_json(std::string_view text) {
  try {
    json j = json::parse(text);
    CompletionRecord r;
    r.cache_key = j.at("cache_key").get<std::string>();
    r.model = j.at("model").get<std::string>();
    const auto& p = j.at("params");
    r.temperature = p.at("temperature").get<double>();
    r.top_p = p.at("top_p").get<double>();
    r.max_tokens = p.at("max_tokens").get<int>();
    r.prompt = j.at("prompt").get<std::string>();
    r.response = j.at("response").get<std::string>();
    r.timestamp = j.value("timestamp", "");
    if (j.contains("token_usage")) {
      const auto& u = j["token_usage"];
      r.usage.prompt_tokens = u.value("prompt_tokens", 0);
      r.usage.completion_tokens = u.value("completion_tokens", 0);
      r.usage.total_tokens = u.value("total_tokens", 0);
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed completion record: ") + e.what());
  }
}

namespace {

struct ParsedBase {
  std::string scheme_host_port;
  std::string path_prefix;
};

ParsedBase parse_base(std::string_view base) {
  auto scheme_end = base.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "API base must include a scheme: " + std::string(base));
  }
  auto path_start = base.find('/', scheme_end + 3);
  ParsedBase out;
  if (path_start == std::string_view::npos) {
    out.scheme_host_port = std::string(base);
  } else {
    out.scheme_host_port = std::string(base.substr(0, path_start));
    out.path_prefix = std::string(base.substr(path_start));
  }
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

}  // namespace

HttpBackend::HttpBackend(std::string api_base, std::string api_key)
    : api_base_(std::move(api_base)), api_key_(std::move(api_key)) {}

ChatResponse HttpBackend::send(const ModelSpec& model, std::string_view prompt) {
  const std::string& base = model.endpoint.empty() ? api_base_ : model.endpoint;
  if (base.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no API base configured (set EAPMT_API_BASE)");
  }
  ParsedBase parsed = parse_base(base);
  httplib::Client cli(parsed.scheme_host_port);
  cli.set_connection_timeout(model.request_timeout);
  cli.set_read_timeout(model.request_timeout);
  cli.set_write_timeout(model.request_timeout);

  json body;
  body["model"] = model.name;
  body["messages"] = json::array({{{"role", "user"}, {"content", std::string(prompt)}}});
  body["temperature"] = model.temperature;
  body["top_p"] = model.top_p;
  body["max_tokens"] = model.max_tokens;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string path = parsed.path_prefix + "/chat/completions";
  spdlog::debug("POST {}{} Authorization: {} body: {}", parsed.scheme_host_port, path,
                api_key_.empty() ? "<none>" : "Bearer <redacted>", payload);

  auto res = cli.Post(path, headers, payload, "application/json");
  if (!res) {
    throw Error(ErrorCode::kNetwork, "request to " + parsed.scheme_host_port + path +
                                         " failed: " + httplib::to_string(res.error()));
  }
  spdlog::debug("HTTP {} body: {}", res->status, res->body);
  if (res->status == 429 || res->status >= 500) {
    throw Error(ErrorCode::kNetwork, "HTTP " + std::to_string(res->status) + " from " + path);
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kProtocol,
                "HTTP " + std::to_string(res->status) + " from " + path + ": " + res->body);
  }
  try {
    json reply = json::parse(res->body);
    ChatResponse out;
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    out.text = content.is_null() ? std::string() : content.get<std::string>();
    if (reply.contains("usage") && reply["usage"].is_object()) {
      const auto& u = reply["usage"];
      out.usage.prompt_tokens = u.value("prompt_tokens", 0);
      out.usage.completion_tokens = u.value("completion_tokens", 0);
      out.usage.total_tokens = u.value("total_tokens", 0);
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("unexpected chat completion reply: ") + e.what());
  }
}

ChatResponse OfflineBackend::send(const ModelSpec& model, std::string_view) {
  throw Error(ErrorCode::kReplayMiss, "offline backend cannot serve model " + model.name);
}

StubRule StubRule::fixed(std::string pattern, std::string response) {
  return StubRule{std::move(pattern), [response = std::move(response)](const std::string&) {
                    return response;
                  }};
}

StubBackend::StubBackend(std::vector<StubRule> rules) {
  for (auto& rule : rules) {
    std::regex re(rule.pattern, std::regex::ECMAScript);
    rules_.emplace_back(std::move(re), std::move(rule));
  }
}

ChatResponse StubBackend::send(const ModelSpec&, std::string_view prompt) {
  const std::string text(prompt);
  const StubRule* match = nullptr;
  for (const auto& [re, rule] : rules_) {
    if (std::regex_search(text, re)) {
      if (match) {
        throw Error(ErrorCode::kInvalidArgument, "stub patterns overlap: '" + match->pattern +
                                                     "' and '" + rule.pattern + "'");
      }
      match = &rule;
    }
  }
  if (!match) {
    throw Error(ErrorCode::kNotFound,
                "stub has no rule for prompt starting '" + text.substr(0, 60) + "'");
  }
  return ChatResponse{match->respond(text), {}};
}

std::string_view client_mode_name(ClientMode mode) {
  switch (mode) {
    case ClientMode::kLive: return "live";
    case ClientMode::kReplay: return "replay";
    case ClientMode::kRecord: return "record";
  }
  return "live";
}

ClientMode parse_client_mode(std::string_view name) {
  if (name == "live") return ClientMode::kLive;
  if (name == "replay") return ClientMode::kReplay;
  if (name == "record") return ClientMode::kRecord;
  throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + std::string(name) + "'");
}

LlmClient::LlmClient(std::shared_ptr<ChatBackend> backend, ClientOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.parallelism, 1, 1024))) {
  if (!backend_) throw Error(ErrorCode::kInvalidArgument, "client needs a backend");
  if (!options_.retry.sleep) {
    options_.retry.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
  if (options_.mode == ClientMode::kReplay &&
      (!options_.cache_dir || !std::filesystem::is_directory(*options_.cache_dir))) {
    throw Error(ErrorCode::kInvalidArgument, "replay mode requires an existing cache directory");
  }
}

std::filesystem::path LlmClient::record_path(const std::string& key) const {
  return *options_.cache_dir / key.substr(0, 2) / (key + ".json");
}

std::optional<CompletionRecord> LlmClient::lookup(const std::string& key) {
  {
    std::shared_lock lock(cache_mutex_);
    if (auto it = memory_cache_.find(key); it != memory_cache_.end()) return it->second;
  }
  if (!options_.cache_dir) return std::nullopt;
  auto path = record_path(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  CompletionRecord record = CompletionRecord::from_json(detail::read_file(path));
  std::unique_lock lock(cache_mutex_);
  memory_cache_.emplace(key, record);
  return record;
}

void LlmClient::persist(const CompletionRecord& record) {
  std::unique_lock lock(cache_mutex_);
  if (options_.cache_dir) detail::write_file_atomic(record_path(record.cache_key), record.to_json());
  memory_cache_[record.cache_key] = record;
}

CompletionRecord LlmClient::fetch(const ModelSpec& model, std::string_view prompt,
                                  const std::string& key) {
  const RetryPolicy& retry = options_.retry;
  auto delay = retry.initial_delay;
  for (int attempt = 1;; ++attempt) {
    ChatResponse reply;
    try {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{in_flight_};
      ++backend_calls_;
      reply = backend_->send(model, prompt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNetwork || attempt >= retry.max_attempts) throw;
      spdlog::warn("attempt {}/{} for {} failed: {}; retrying in {} ms", attempt,
                   retry.max_attempts, model.name, e.what(), delay.count());
      retry.sleep(delay);
      delay = std::min(retry.max_delay,
                       std::chrono::milliseconds(static_cast<std::int64_t>(
                           std::llround(static_cast<double>(delay.count()) * retry.multiplier))));
      continue;
    }
    if (unicode::trim(reply.text).empty()) {
      throw Error(ErrorCode::kEmptyResponse, "model " + model.name + " returned an empty response");
    }
    CompletionRecord record;
    record.cache_key = key;
    record.model = model.name;
    record.temperature = model.temperature;
    record.top_p = model.top_p;
    record.max_tokens = model.max_tokens;
    record.prompt = std::string(prompt);
    record.response = std::move(reply.text);
    record.timestamp = detail::utc_timestamp();
    record.usage = reply.usage;
    return record;
  }
}

std::string LlmClient::complete(const ModelSpec& model, const RenderedPrompt& prompt) {
  return complete_text(model, prompt.final_text);
}

std::string LlmClient::complete_text(const ModelSpec& model, std::string_view prompt) {
  model.validate();
  {
    std::lock_guard lock(log_mutex_);
    requested_.emplace_back(prompt);
  }
  const std::string key = cache_key(model, prompt);

  if (options_.mode != ClientMode::kRecord) {
    if (auto hit = lookup(key)) return hit->response;
    if (options_.mode == ClientMode::kReplay) {
      throw Error(ErrorCode::kReplayMiss, "no cached completion for key " + key);
    }
  }

  // Concurrent requests for one key share a single backend call and cache write.
  std::promise<CompletionRecord> promise;
  std::shared_future<CompletionRecord> future;
  bool owner = false;
  {
    std::lock_guard lock(pending_mutex_);
    if (auto it = pending_.find(key); it != pending_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      pending_.emplace(key, future);
      owner = true;
    }
  }
  if (!owner) return future.get().response;

  try {
    CompletionRecord record = fetch(model, prompt, key);
    persist(record);
    promise.set_value(record);
    std::lock_guard lock(pending_mutex_);
    pending_.erase(key);
    return record.response;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(pending_mutex_);
    pending_.erase(key);
    throw;
  }
}

std::vector<std::string> LlmClient::requested_prompts() const {
  std::lock_guard lock(log_mutex_);
  return requested_;
}

std::unique_ptr<LlmClient> make_stub(std::vector<StubRule> rules,
                                     std::optional<std::filesystem::path> cache_dir) {
  ClientOptions options;
  options.mode = ClientMode::kLive;
  options.cache_dir = std::move(cache_dir);
  options.retry.sleep = [](std::chrono::milliseconds) {};
  return std::make_unique<LlmClient>(std::make_shared<StubBackend>(std::move(rules)),
                                     std::move(options));
}

}  // namespace eapmt
