#include "catchup/clock.hpp"

#include "catchup/error.hpp"

#include <string>

namespace catchup {

void VirtualClock::step(Timestamp delta_ms) {
  if (delta_ms < 0) throw Error(ErrorCode::ClockError, "virtual clock cannot step backwards");
  now_.fetch_add(delta_ms, std::memory_order_acq_rel);
}

void VirtualClock::advance_to(Timestamp t) {
  const Timestamp current = now();
  if (t < current) {
    throw Error(ErrorCode::ClockError, "virtual clock at " + std::to_string(current) +
                                           " cannot move back to " + std::to_string(t));
  }
  now_.store(t, std::memory_order_release);
}

Timestamp WallClock::now() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - origin_)
      .count();
}

}  // namespace catchup
