#include "catchup/llm_backend.hpp"

#include "catchup/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace catchup {

using Json = nlohmann::json;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::optional<LlmConfig> LlmConfig::from_env() {
  LlmConfig c;
  c.url = env_or("CATCHUP_LLM_URL", "");
  if (c.url.empty()) return std::nullopt;
  c.model = env_or("CATCHUP_LLM_MODEL", c.model);
  c.api_key = env_or("CATCHUP_LLM_API_KEY", "");
  return c;
}

LlmSummarizer::LlmSummarizer(LlmConfig config) : config_(std::move(config)) {
  const auto scheme = config_.url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::BadConfig, "llm url must start with http:// or https://");
  }
  const auto slash = config_.url.find('/', scheme + 3);
  origin_ = config_.url.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : config_.url.substr(slash);
  if (config_.timeout_ms <= 0 || config_.retries < 0) {
    throw Error(ErrorCode::BadConfig, "llm timeout must be positive and retries non-negative");
  }
}

std::string LlmSummarizer::request_body(const SummaryRequest& request) const {
  std::string transcript;
  for (const auto& u : request.source) {
    transcript += u.text;
    transcript += '\n';
  }
  const std::string limit = std::to_string(request.word_limit);
  std::string instruction;
  if (request.kind == SummaryKind::UtteranceSummary) {
    instruction = "Condense what " + request.speaker.str() + " just said into at most " + limit +
                  " words. Output only the condensed text.";
  } else {
    instruction = "The reader was away while " + request.speaker.str() +
                  " said the following. Give them the gist in at most " + limit +
                  " words. Output only the gist.";
  }
  Json body{{"model", config_.model},
            {"temperature", 0},
            {"max_tokens", request.word_limit * 4},
            {"messages", Json::array({Json{{"role", "system"}, {"content", instruction}},
                                      Json{{"role", "user"}, {"content", transcript}}})}};
  return body.dump();
}

std::string LlmSummarizer::generate(const SummaryRequest& request) {
  const std::string body = request_body(request);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    httplib::Client client(origin_);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      if (retryable(res->status)) continue;
      break;
    }
    Json j = Json::parse(res->body, nullptr, false);
    if (j.is_discarded()) {
      last_error = "response is not JSON";
      continue;
    }
    try {
      std::string text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (count_words(text) == 0) {
        last_error = "empty completion";
        continue;
      }
      return text;
    } catch (const Json::exception&) {
      last_error = "response has no choices[0].message.content";
    }
  }
  throw Error(ErrorCode::BackendUnavailable, "llm backend: " + last_error);
}

}  // namespace catchup
