#include "catchup/latency.hpp"

#include "catchup/error.hpp"

#include <algorithm>
#include <cmath>

namespace catchup {

std::string_view to_string(LatencyStage s) {
  switch (s) {
    case LatencyStage::Transcription: return "transcription";
    case LatencyStage::Summarization: return "summarization";
    case LatencyStage::EndToEnd: return "end_to_end";
  }
  return "?";
}

void LatencyRegistry::record(LatencyStage stage, std::int64_t sample_ms) {
  if (sample_ms < 0) throw Error(ErrorCode::InvalidRequest, "latency sample must be >= 0");
  auto& a = acc_[static_cast<std::size_t>(stage)];
  if (a.count == 0) {
    a.min = a.max = sample_ms;
  } else {
    a.min = std::min(a.min, sample_ms);
    a.max = std::max(a.max, sample_ms);
  }
  ++a.count;
  const double x = static_cast<double>(sample_ms);
  const double delta = x - a.mean;
  a.mean += delta / static_cast<double>(a.count);
  a.m2 += delta * (x - a.mean);
}

StageStats LatencyRegistry::stats(LatencyStage stage) const {
  const auto& a = acc_[static_cast<std::size_t>(stage)];
  StageStats s;
  s.count = a.count;
  if (a.count == 0) return s;
  s.mean = a.mean;
  s.stddev = a.count > 1 ? std::sqrt(a.m2 / static_cast<double>(a.count - 1)) : 0.0;
  s.min = a.min;
  s.max = a.max;
  return s;
}

void record_stage_latency(LatencyStage stage, std::int64_t sample_ms, LatencyRegistry& registry) {
  registry.record(stage, sample_ms);
}

}  // namespace catchup
