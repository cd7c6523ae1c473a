#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace catchup {

enum class LatencyStage { Transcription, Summarization, EndToEnd };

inline constexpr std::array<LatencyStage, 3> kLatencyStages = {
    LatencyStage::Transcription, LatencyStage::Summarization, LatencyStage::EndToEnd};

std::string_view to_string(LatencyStage s);

struct StageStats {
  std::uint64_t count = 0;
  std::optional<double> mean;  // absent when count == 0
  double stddev = 0.0;         // sample standard deviation; 0 for count < 2
  std::int64_t min = 0;
  std::int64_t max = 0;
};

/// Running per-stage statistics (Welford). Not thread-safe; owned by the
/// session loop.
class LatencyRegistry {
public:
  void record(LatencyStage stage, std::int64_t sample_ms);
  StageStats stats(LatencyStage stage) const;

private:
  struct Accumulator {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    std::int64_t min = 0;
    std::int64_t max = 0;
  };
  std::array<Accumulator, 3> acc_{};
};

void record_stage_latency(LatencyStage stage, std::int64_t sample_ms, LatencyRegistry& registry);

}  // namespace catchup
