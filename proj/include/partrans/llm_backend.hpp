// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "partrans/domain.hpp"
#include "partrans/tokens.hpp"

namespace partrans {

struct ChatRequest {
  std::optional<std::string> system_prompt;
  std::vector<std::string> user_messages;
  std::string model_id;
  double temperature = 0.2;
  std::size_t max_tokens = 4096;
};

struct ChatResponse {
  std::string text;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

/// A request shaped by a profile: model id, temperature, response budget.
ChatRequest make_request(const LlmProfile& profile, std::optional<std::string> system_prompt,
                         std::string user_message);

/// Token estimate over every piece of text the request sends.
std::size_t request_token_estimate(const ChatRequest& request, const TokenEstimator& estimator);

/**
 * Chat-completion backend.
 *
 * complete() enforces the context window before anything reaches the
 * transport; implementations only see requests that fit. Concurrent calls are
 * allowed.
 */
class Backend {
 public:
  explicit Backend(TokenEstimator estimator = default_token_estimator());
  virtual ~Backend();

  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  /// Throws ContextOverflow when the request estimate plus max_tokens exceeds
  /// `context_length`.
  ChatResponse complete(const ChatRequest& request, std::size_t context_length);

  ChatResponse complete(const ChatRequest& request, const LlmProfile& profile) {
    return complete(request, profile.context_length);
  }

  /// Requests that passed the guard and were handed to the transport.
  std::size_t calls() const noexcept { return calls_.load(); }

  const TokenEstimator& estimator() const noexcept { return estimator_; }

 private:
  virtual ChatResponse do_complete(const ChatRequest& request) = 0;

  TokenEstimator estimator_;
  std::atomic<std::size_t> calls_{0};
};

/// Replays a fixed queue of replies. Asking past the end is an error.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies,
                           TokenEstimator estimator = default_token_estimator());

  /// JSON file holding an array of strings.
  static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  std::size_t consumed() const;
  std::size_t remaining() const;
  /// Every request that consumed a reply, in order.
  std::vector<ChatRequest> requests() const;

 private:
  ChatResponse do_complete(const ChatRequest& request) override;

  mutable std::mutex mutex_;
  std::deque<std::string> replies_;
  std::vector<ChatRequest> seen_;
  std::size_t consumed_ = 0;
};

/**
 * Generic chat-completion HTTP client.
 *
 * POSTs {model, messages[{role, content}], temperature, max_tokens} and reads
 * either choices[0].message.content or message.content from the reply, which
 * covers hosted OpenAI-style APIs and local model servers. Connection failures
 * and 5xx replies are retried with exponential backoff; 4xx replies are not.
 */
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(const BackendDescriptor& descriptor,
                       TokenEstimator estimator = default_token_estimator());
  ~HttpBackend() override;

  /// Attempts made on the wire, including retries.
  std::size_t transport_attempts() const noexcept { return attempts_.load(); }

  static json request_body(const ChatRequest& request);
  /// Throws TransportError when no generated text can be found.
  static ChatResponse parse_response(std::string_view body, const ChatRequest& request,
                                     const TokenEstimator& estimator);

 private:
  ChatResponse do_complete(const ChatRequest& request) override;

  std::string base_url_;
  std::string path_;
  std::string api_key_;  // never logged
  int max_retries_;
  double backoff_s_;
  double timeout_s_;
  std::atomic<std::size_t> attempts_{0};
};

/// Builds a backend for one session. `script_key` picks the reply file from
/// a scripted descriptor's script_dir (`<script_dir>/<script_key>.json`).
using BackendFactory =
    std::function<std::unique_ptr<Backend>(const LlmProfile& profile, std::string_view script_key)>;

std::unique_ptr<Backend> make_backend(const LlmProfile& profile, std::string_view script_key);

}  // namespace partrans
