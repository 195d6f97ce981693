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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eapmt/prompts.hpp"

namespace eapmt {

struct ModelSpec {
  std::string name;
  // Empty means "use the client's API base".
  std::string endpoint;
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 2048;
  std::chrono::seconds request_timeout{120};

  // Throws Error(kInvalidArgument).
  void validate() const;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total_tokens = 0;
};

struct CompletionRecord {
  std::string cache_key;
  std::string model;
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 0;
  std::string prompt;
  std::string response;
  std::string timestamp;
  TokenUsage usage;

  std::string to_json() const;
  static CompletionRecord from_json(std::string_view text);
};

// Content address of a completion: SHA-256 over the model name, sampling
// parameters, and prompt text.
std::string cache_key(const ModelSpec& model, std::string_view prompt);

struct ChatResponse {
  std::string text;
  TokenUsage usage;
};

// Transport. Implementations throw Error(kNetwork) for retryable failures.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse send(const ModelSpec& model, std::string_view prompt) = 0;
};

// OpenAI-compatible chat completions over HTTP(S).
class HttpBackend : public ChatBackend {
 public:
  HttpBackend(std::string api_base, std::string api_key);
  ChatResponse send(const ModelSpec& model, std::string_view prompt) override;

 private:
  std::string api_base_;
  std::string api_key_;
};

// Fails every call with kReplayMiss. Replay clients use it.
class OfflineBackend : public ChatBackend {
 public:
  ChatResponse send(const ModelSpec& model, std::string_view prompt) override;
};

struct StubRule {
  std::string pattern;  // ECMAScript regex, searched within the prompt
  std::function<std::string(const std::string& prompt)> respond;

  static StubRule fixed(std::string pattern, std::string response);
};

class StubBackend : public ChatBackend {
 public:
  explicit StubBackend(std::vector<StubRule> rules);
  ChatResponse send(const ModelSpec& model, std::string_view prompt) override;

 private:
  std::vector<std::pair<std::regex, StubRule>> rules_;
};

enum class ClientMode { kLive, kReplay, kRecord };

std::string_view client_mode_name(ClientMode mode);
ClientMode parse_client_mode(std::string_view name);

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleep_for
};

struct ClientOptions {
  ClientMode mode = ClientMode::kLive;
  // Records live under <cache_dir>/<first two hex>/<key>.json.
  std::optional<std::filesystem::path> cache_dir;
  std::size_t parallelism = 4;
  RetryPolicy retry;
};

class LlmClient {
 public:
  LlmClient(std::shared_ptr<ChatBackend> backend, ClientOptions options);

  LlmClient(const LlmClient&) = delete;
  LlmClient& operator=(const LlmClient&) = delete;

  std::string complete(const ModelSpec& model, const RenderedPrompt& prompt);
  std::string complete_text(const ModelSpec& model, std::string_view prompt);

  ClientMode mode() const { return options_.mode; }
  std::size_t parallelism() const { return options_.parallelism; }

  // Backend invocations, including failed attempts.
  std::size_t backend_calls() const { return backend_calls_.load(); }
  // Every prompt passed to complete(), in call order.
  std::vector<std::string> requested_prompts() const;

 private:
  std::optional<CompletionRecord> lookup(const std::string& key);
  CompletionRecord fetch(const ModelSpec& model, std::string_view prompt, const std::string& key);
  void persist(const CompletionRecord& record);
  std::filesystem::path record_path(const std::string& key) const;

  std::shared_ptr<ChatBackend> backend_;
  ClientOptions options_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::size_t> backend_calls_{0};

  mutable std::shared_mutex cache_mutex_;
  std::unordered_map<std::string, CompletionRecord> memory_cache_;

  std::mutex pending_mutex_;
  std::unordered_map<std::string, std::shared_future<CompletionRecord>> pending_;

  mutable std::mutex log_mutex_;
  std::vector<std::string> requested_;
};

// A live-mode client backed by canned responses. Retries are immediate.
std::unique_ptr<LlmClient> make_stub(std::vector<StubRule> rules,
                                     std::optional<std::filesystem::path> cache_dir = std::nullopt);

}  // namespace eapmt
