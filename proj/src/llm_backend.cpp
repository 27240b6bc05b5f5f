// SPDX-License-Identifier: Apache-2.0
#include "partrans/llm_backend.hpp"

#include "partrans/errors.hpp"

namespace partrans {

ChatRequest make_request(const LlmProfile& profile, std::optional<std::string> system_prompt,
                         std::string user_message) {
  ChatRequest request;
  request.system_prompt = std::move(system_prompt);
  request.user_messages.push_back(std::move(user_message));
  request.model_id = profile.model_id;
  request.temperature = profile.temperature;
  request.max_tokens = profile.max_response_tokens;
  return request;
}

std::size_t request_token_estimate(const ChatRequest& request, const TokenEstimator& estimator) {
  std::string all;
  if (request.system_prompt) all += *request.system_prompt;
  for (const auto& m : request.user_messages) all += m;
  return estimator(all);
}

Backend::Backend(TokenEstimator estimator) : estimator_(std::move(estimator)) {}

Backend::~Backend() = default;

ChatResponse Backend::complete(const ChatRequest& request, std::size_t context_length) {
  if (request.user_messages.empty()) {
    throw PreconditionError("chat request needs at least one user message");
  }
  const std::size_t needed = request_token_estimate(request, estimator_) + request.max_tokens;
  if (needed > context_length) throw ContextOverflow(needed, context_length);
  ++calls_;
  return do_complete(request);
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies, TokenEstimator estimator)
    : Backend(std::move(estimator)), replies_(replies.begin(), replies.end()) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("bad script " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!doc.is_array()) throw ConfigError("script " + path.string() + " must be a JSON array");
  std::vector<std::string> replies;
  for (const auto& r : doc) {
    if (!r.is_string()) throw ConfigError("script " + path.string() + " holds a non-string reply");
    replies.push_back(r.get<std::string>());
  }
  return std::make_unique<ScriptedBackend>(std::move(replies));
}

std::size_t ScriptedBackend::consumed() const {
  std::lock_guard lock(mutex_);
  return consumed_;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mutex_);
  return replies_.size();
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mutex_);
  return seen_;
}

ChatResponse ScriptedBackend::do_complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  if (replies_.empty()) throw ScriptExhausted(consumed_);
  ChatResponse response;
  response.text = std::move(replies_.front());
  replies_.pop_front();
  ++consumed_;
  seen_.push_back(request);
  response.prompt_tokens = request_token_estimate(request, estimator());
  response.completion_tokens = estimator()(response.text);
  return response;
}

std::unique_ptr<Backend> make_backend(const LlmProfile& profile, std::string_view script_key) {
  const auto& d = profile.backend;
  if (d.kind == "http") return std::make_unique<HttpBackend>(d);
  if (d.kind != "scripted") throw ConfigError("unknown backend kind '" + d.kind + "'");
  if (!d.script_dir.empty()) {
    return ScriptedBackend::from_file(d.script_dir / (std::string(script_key) + ".json"));
  }
  if (!d.script_file.empty()) return ScriptedBackend::from_file(d.script_file);
  return std::make_unique<ScriptedBackend>(d.replies);
}

}  // namespace partrans
