#pragma once

#include "catchup/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace catchup {

inline constexpr Timestamp kDefaultPauseThresholdMs = 700;

/// Words of an utterance that has not been closed yet.
struct UtteranceDraft {
  ParticipantId speaker;
  std::vector<std::string> words;
  Timestamp start_ms = 0;
  Timestamp end_ms = 0;

  std::string text() const;
};

/// Incremental pause-based segmentation for one speaker. A gap of at least
/// `pause_threshold_ms` between one token's offset and the next token's onset
/// closes the open utterance.
class UtteranceSegmenter {
public:
  explicit UtteranceSegmenter(ParticipantId speaker,
                              Timestamp pause_threshold_ms = kDefaultPauseThresholdMs);

  /// Appends a token. Returns the utterance it closed, if the gap before it
  /// reached the threshold. Throws UnsortedTokens on overlap or disorder.
  std::optional<UtteranceDraft> push(const TimedToken& token);

  /// Closes the open utterance once `now` is a full pause past its last word.
  std::optional<UtteranceDraft> close_if_idle(Timestamp now);

  std::optional<UtteranceDraft> flush();

  bool has_open() const noexcept { return open_.has_value(); }
  const std::optional<UtteranceDraft>& open() const noexcept { return open_; }
  std::string partial_text() const;
  const std::optional<Timestamp>& last_offset() const noexcept { return last_offset_; }
  const ParticipantId& speaker() const noexcept { return speaker_; }
  Timestamp pause_threshold_ms() const noexcept { return threshold_; }

private:
  ParticipantId speaker_;
  Timestamp threshold_;
  std::optional<UtteranceDraft> open_;
  std::optional<Timestamp> last_offset_;
};

/// Batch segmentation of one speaker's time-ordered tokens. Utterances get
/// ids "u<n>" and seq numbers 1..n in order.
std::vector<Utterance> segment_utterances(std::span<const TimedToken> tokens,
                                          Timestamp pause_threshold_ms);

}  // namespace catchup
