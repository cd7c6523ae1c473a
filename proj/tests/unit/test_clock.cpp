#include "catchup/clock.hpp"
#include "catchup/error.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace catchup;

TEST(VirtualClock, StartsAtZero) {
  VirtualClock c;
  EXPECT_EQ(c.now(), 0);
  EXPECT_TRUE(c.is_virtual());
}

TEST(VirtualClock, StepAdvances) {
  VirtualClock c;
  c.step(1500);
  EXPECT_EQ(c.now(), 1500);
  c.step(0);
  EXPECT_EQ(c.now(), 1500);
}

TEST(VirtualClock, AdvanceToRejectsPast) {
  VirtualClock c(1000);
  c.advance_to(1000);
  c.advance_to(4000);
  EXPECT_EQ(c.now(), 4000);
  try {
    c.advance_to(3999);
    FAIL() << "expected ClockError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClockError);
  }
}

TEST(VirtualClock, NegativeStepRejected) {
  VirtualClock c;
  EXPECT_THROW(c.step(-1), Error);
}

TEST(WallClock, Monotone) {
  WallClock c;
  EXPECT_FALSE(c.is_virtual());
  Timestamp prev = c.now();
  EXPECT_GE(prev, 0);
  for (int i = 0; i < 1000; ++i) {
    const Timestamp t = c.now();
    EXPECT_GE(t, prev);
    prev = t;
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(5));
  EXPECT_GE(c.now(), 5);
}
