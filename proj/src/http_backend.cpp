// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "partrans/errors.hpp"
#include "partrans/llm_backend.hpp"

namespace partrans {

namespace {

// "http://host:8080/v1/chat/completions" -> {"http://host:8080", "/v1/chat/completions"}
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("backend url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpBackend::HttpBackend(const BackendDescriptor& descriptor, TokenEstimator estimator)
    : Backend(std::move(estimator)),
      max_retries_(descriptor.max_retries),
      backoff_s_(descriptor.retry_backoff_s),
      timeout_s_(descriptor.request_timeout_s) {
  std::tie(base_url_, path_) = split_url(descriptor.url);
  if (!descriptor.api_key_env.empty()) {
    if (const char* key = std::getenv(descriptor.api_key_env.c_str())) api_key_ = key;
  }
}

HttpBackend::~HttpBackend() = default;

json HttpBackend::request_body(const ChatRequest& request) {
  json messages = json::array();
  if (request.system_prompt) {
    messages.push_back({{"role", "system"}, {"content", *request.system_prompt}});
  }
  for (const auto& m : request.user_messages) {
    messages.push_back({{"role", "user"}, {"content", m}});
  }
  return json{{"model", request.model_id},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens},
              {"stream", false}};
}

ChatResponse HttpBackend::parse_response(std::string_view body, const ChatRequest& request,
                                         const TokenEstimator& estimator) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception&) {
    throw TransportError("model server returned a non-JSON body");
  }
  const json* content = nullptr;
  if (auto c = doc.find("choices"); c != doc.end() && c->is_array() && !c->empty()) {
    const auto& first = c->front();
    if (auto msg = first.find("message"); msg != first.end() && msg->contains("content")) {
      content = &(*msg)["content"];
    } else if (first.contains("text")) {
      content = &first["text"];
    }
  } else if (auto msg = doc.find("message"); msg != doc.end() && msg->contains("content")) {
    content = &(*msg)["content"];
  }
  if (content == nullptr || !content->is_string()) {
    throw TransportError("model server reply carries no generated text");
  }

  ChatResponse response;
  response.text = content->get<std::string>();
  response.prompt_tokens = request_token_estimate(request, estimator);
  response.completion_tokens = estimator(response.text);
  if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
    response.prompt_tokens = usage->value("prompt_tokens", response.prompt_tokens);
    response.completion_tokens = usage->value("completion_tokens", response.completion_tokens);
  } else {
    // local servers report eval counts instead
    response.prompt_tokens = doc.value("prompt_eval_count", response.prompt_tokens);
    response.completion_tokens = doc.value("eval_count", response.completion_tokens);
  }
  return response;
}

ChatResponse HttpBackend::do_complete(const ChatRequest& request) {
  const std::string body = dump_json(request_body(request));

  httplib::Client client(base_url_);
  const auto secs = static_cast<time_t>(timeout_s_);
  const auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::string last_error;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    if (attempt > 0) {
      const double delay = backoff_s_ * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    ++attempts_;
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      throw TransportError("model server rejected the request with HTTP " +
                           std::to_string(res->status));
    }
    return parse_response(res->body, request, estimator());
  }
  throw TransportError("model server unreachable after " + std::to_string(max_retries_ + 1) +
                       " attempts: " + last_error);
}

}  // namespace partrans
