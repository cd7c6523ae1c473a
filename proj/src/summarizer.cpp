#include "catchup/summarizer.hpp"

#include "catchup/error.hpp"

#include <cctype>

namespace catchup {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view to_string(SummaryKind k) {
  return k == SummaryKind::UtteranceSummary ? "UtteranceSummary" : "ReEngagementSummary";
}

SummaryKind parse_summary_kind(std::string_view s) {
  if (s == "UtteranceSummary") return SummaryKind::UtteranceSummary;
  if (s == "ReEngagementSummary") return SummaryKind::ReEngagementSummary;
  throw Error(ErrorCode::MalformedPayload, "unknown summary kind '" + std::string(s) + "'");
}

void SummaryRequest::validate() const {
  if (source.empty()) throw Error(ErrorCode::InvalidRequest, "summary request has no source");
  if (word_limit < 1) throw Error(ErrorCode::InvalidRequest, "word_limit must be positive");
  for (const auto& u : source) {
    if (u.speaker != speaker) {
      throw Error(ErrorCode::InvalidRequest, "summary source mixes speakers: " +
                                                 u.speaker.str() + " vs " + speaker.str());
    }
  }
}

std::vector<std::string> SummaryRequest::source_ids() const {
  std::vector<std::string> ids;
  ids.reserve(source.size());
  for (const auto& u : source) ids.push_back(u.utterance_id);
  return ids;
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

int count_words(std::string_view text) { return static_cast<int>(split_words(text).size()); }

std::string enforce_word_limit(std::string_view text, int limit) {
  if (limit < 1) throw Error(ErrorCode::InvalidRequest, "word limit must be positive");
  const auto words = split_words(text);
  if (static_cast<int>(words.size()) <= limit) return std::string(text);

  std::string out;
  for (int i = 0; i < limit; ++i) {
    if (i) out += ' ';
    out += words[static_cast<std::size_t>(i)];
  }
  out += kTruncationMarker;
  return out;
}

std::string ExtractiveSummarizer::generate(const SummaryRequest& request) {
  std::string joined;
  for (const auto& u : request.source) {
    if (!joined.empty()) joined += ' ';
    joined += u.text;
  }
  return enforce_word_limit(joined, request.word_limit);
}

Summary summarize(const SummaryRequest& request, SummarizerBackend& backend,
                  const ClockSource& clock) {
  request.validate();
  const Timestamp submitted = clock.now();
  std::string text = enforce_word_limit(backend.generate(request), request.word_limit);
  Summary s;
  s.word_count = count_words(text);
  s.text = std::move(text);
  s.source_ids = request.source_ids();
  s.latency_ms = clock.now() - submitted;
  return s;
}

Summary summarize_with_fallback(const SummaryRequest& request, SummarizerBackend& backend,
                                const ClockSource& clock) {
  const Timestamp submitted = clock.now();
  try {
    return summarize(request, backend, clock);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BackendUnavailable) throw;
  }
  ExtractiveSummarizer fallback;
  Summary s = summarize(request, fallback, clock);
  s.latency_ms = clock.now() - submitted;
  s.degraded = true;
  return s;
}

}  // namespace catchup
