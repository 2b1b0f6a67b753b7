#pragma once

#include <chrono>

namespace tb {

using Clock = std::chrono::steady_clock;

inline double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

inline Clock::duration from_ms(double ms) {
  return std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double, std::milli>(ms));
}

// Milliseconds elapsed since a fixed run epoch.
class RunClock {
 public:
  RunClock() : epoch_(Clock::now()) {}
  explicit RunClock(Clock::time_point epoch) : epoch_(epoch) {}

  double now_ms() const { return ms_between(epoch_, Clock::now()); }
  double at_ms(Clock::time_point t) const { return ms_between(epoch_, t); }
  Clock::time_point epoch() const { return epoch_; }

 private:
  Clock::time_point epoch_;
};

}  // namespace tb
