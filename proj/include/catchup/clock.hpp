#pragma once

#include "catchup/types.hpp"

#include <atomic>
#include <chrono>

namespace catchup {

/// Source of session time. Implementations must be monotone.
class ClockSource {
public:
  virtual ~ClockSource() = default;
  virtual Timestamp now() const = 0;
  virtual bool is_virtual() const = 0;
};

/// Harness-driven time. Only moves when stepped.
class VirtualClock final : public ClockSource {
public:
  explicit VirtualClock(Timestamp start = 0) : now_(start) {}

  Timestamp now() const override { return now_.load(std::memory_order_acquire); }
  bool is_virtual() const override { return true; }

  void step(Timestamp delta_ms);
  /// Jump forward to `t`; throws ClockError when `t` is in the past.
  void advance_to(Timestamp t);

private:
  std::atomic<Timestamp> now_;
};

/// Steady wall time measured from construction.
class WallClock final : public ClockSource {
public:
  WallClock() : origin_(std::chrono::steady_clock::now()) {}

  Timestamp now() const override;
  bool is_virtual() const override { return false; }

private:
  std::chrono::steady_clock::time_point origin_;
};

inline Timestamp clock_now(const ClockSource& clock) { return clock.now(); }

}  // namespace catchup
