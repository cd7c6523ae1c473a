#include "catchup/segmenter.hpp"

#include "catchup/error.hpp"

namespace catchup {

std::string UtteranceDraft::text() const {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

UtteranceSegmenter::UtteranceSegmenter(ParticipantId speaker, Timestamp pause_threshold_ms)
    : speaker_(std::move(speaker)), threshold_(pause_threshold_ms) {
  if (threshold_ <= 0) throw Error(ErrorCode::BadConfig, "pause_threshold_ms must be positive");
}

std::optional<UtteranceDraft> UtteranceSegmenter::push(const TimedToken& token) {
  if (token.offset_ms < token.onset_ms) {
    throw Error(ErrorCode::UnsortedTokens, "token '" + token.word + "' ends before it starts");
  }
  if (last_offset_ && token.onset_ms < *last_offset_) {
    throw Error(ErrorCode::UnsortedTokens,
                "token '" + token.word + "' at " + std::to_string(token.onset_ms) +
                    " overlaps previous token ending at " + std::to_string(*last_offset_));
  }

  std::optional<UtteranceDraft> closed;
  if (open_ && token.onset_ms - open_->end_ms >= threshold_) {
    closed = std::move(open_);
    open_.reset();
  }
  if (!open_) {
    open_ = UtteranceDraft{speaker_, {}, token.onset_ms, token.offset_ms};
  }
  open_->words.push_back(token.word);
  open_->end_ms = token.offset_ms;
  last_offset_ = token.offset_ms;
  return closed;
}

std::optional<UtteranceDraft> UtteranceSegmenter::close_if_idle(Timestamp now) {
  if (open_ && now - open_->end_ms >= threshold_) return flush();
  return std::nullopt;
}

std::optional<UtteranceDraft> UtteranceSegmenter::flush() {
  auto out = std::move(open_);
  open_.reset();
  return out;
}

std::string UtteranceSegmenter::partial_text() const {
  return open_ ? open_->text() : std::string{};
}

std::vector<Utterance> segment_utterances(std::span<const TimedToken> tokens,
                                          Timestamp pause_threshold_ms) {
  std::vector<Utterance> out;
  if (tokens.empty()) return out;

  UtteranceSegmenter seg(tokens.front().speaker, pause_threshold_ms);
  auto emit = [&](UtteranceDraft&& d) {
    Utterance u;
    u.seq = out.size() + 1;
    u.utterance_id = "u" + std::to_string(u.seq);
    u.speaker = d.speaker;
    u.text = d.text();
    u.start_ms = d.start_ms;
    u.end_ms = d.end_ms;
    out.push_back(std::move(u));
  };
  for (const auto& tok : tokens) {
    if (tok.speaker != seg.speaker()) {
      throw Error(ErrorCode::InvalidRequest, "segment_utterances expects a single speaker");
    }
    if (auto closed = seg.push(tok)) emit(std::move(*closed));
  }
  if (auto last = seg.flush()) emit(std::move(*last));
  return out;
}

}  // namespace catchup
