#pragma once

#include "catchup/summarizer.hpp"

#include <optional>
#include <string>

namespace catchup {

struct LlmConfig {
  std::string url;  // full chat-completions endpoint, http or https
  std::string model = "gpt-4-turbo";
  std::string api_key;
  int timeout_ms = 5000;
  int retries = 2;  // extra attempts after the first

  /// CATCHUP_LLM_URL (required), CATCHUP_LLM_MODEL, CATCHUP_LLM_API_KEY.
  static std::optional<LlmConfig> from_env();
};

/// Chat-completions client. Any transport error, non-2xx status or
/// unusable body after the last retry raises BackendUnavailable, which
/// summarize_with_fallback turns into an extractive summary.
class LlmSummarizer final : public SummarizerBackend {
public:
  explicit LlmSummarizer(LlmConfig config);

  std::string generate(const SummaryRequest& request) override;
  std::string_view name() const override { return "llm"; }

  /// The request body sent for `request`; exposed for tests.
  std::string request_body(const SummaryRequest& request) const;

private:
  LlmConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

}  // namespace catchup
