#pragma once

#include "catchup/clock.hpp"
#include "catchup/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace catchup {

inline constexpr int kUtteranceSummaryWords = 10;
inline constexpr int kReEngagementSummaryWords = 15;

/// Appended to text cut short by a word limit; not counted as a word.
inline constexpr std::string_view kTruncationMarker = "…";

enum class SummaryKind { UtteranceSummary, ReEngagementSummary };

std::string_view to_string(SummaryKind k);
SummaryKind parse_summary_kind(std::string_view s);

struct SummaryRequest {
  SummaryKind kind = SummaryKind::UtteranceSummary;
  std::vector<Utterance> source;  // chronological
  int word_limit = kUtteranceSummaryWords;
  ParticipantId speaker;

  /// Throws InvalidRequest when the source is empty, mixes speakers or the
  /// limit is not positive.
  void validate() const;
  std::vector<std::string> source_ids() const;
};

struct Summary {
  std::string text;
  int word_count = 0;
  std::vector<std::string> source_ids;
  std::int64_t latency_ms = 0;
  bool degraded = false;

  friend bool operator==(const Summary&, const Summary&) = default;
};

/// Whitespace-delimited words; punctuation stays attached.
std::vector<std::string_view> split_words(std::string_view text);
int count_words(std::string_view text);

/// Keeps the first `limit` words and marks the cut. Text already within the
/// limit is returned unchanged, so the function is idempotent.
std::string enforce_word_limit(std::string_view text, int limit);

class SummarizerBackend {
public:
  virtual ~SummarizerBackend() = default;
  /// Produces summary text for a validated request. May throw
  /// BackendUnavailable.
  virtual std::string generate(const SummaryRequest& request) = 0;
  virtual std::string_view name() const = 0;
};

/// Deterministic: first `word_limit` words of the chronologically joined
/// source texts.
class ExtractiveSummarizer final : public SummarizerBackend {
public:
  std::string generate(const SummaryRequest& request) override;
  std::string_view name() const override { return "extractive"; }
};

/// Runs `backend`, post-truncates its output to the word limit and stamps
/// latency from `clock`.
Summary summarize(const SummaryRequest& request, SummarizerBackend& backend,
                  const ClockSource& clock);

/// Same as summarize(), but a BackendUnavailable failure falls back to the
/// extractive path and marks the result degraded.
Summary summarize_with_fallback(const SummaryRequest& request, SummarizerBackend& backend,
                                const ClockSource& clock);

}  // namespace catchup
