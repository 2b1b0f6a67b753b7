#pragma once

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <string>
#include <string_view>

#include "triggerbench/clock.hpp"
#include "triggerbench/error.hpp"

namespace tb {

enum class OversubscriptionMode {
  queueing,               // excess tasks wait for a free worker
  proportional_slowdown,  // excess tasks start at once and share the workers
};

inline std::string_view to_string(OversubscriptionMode m) {
  return m == OversubscriptionMode::queueing ? "queueing" : "slowdown";
}

inline OversubscriptionMode parse_oversubscription(std::string_view s) {
  if (s == "queueing" || s == "queue") return OversubscriptionMode::queueing;
  if (s == "slowdown" || s == "proportional-slowdown" || s == "proportional_slowdown")
    return OversubscriptionMode::proportional_slowdown;
  throw ConfigError("unknown oversubscription mode '" + std::string(s) + "'");
}

// Stretch factor applied to a compute interval when `runnable` activities
// share `slots` workers: (r/W) * penalty^(r-W) beyond capacity, 1 otherwise.
inline double oversubscription_stretch(std::size_t runnable, std::size_t slots,
                                       OversubscriptionMode mode, double penalty) {
  if (mode == OversubscriptionMode::queueing || runnable <= slots) return 1.0;
  const double excess = static_cast<double>(runnable - slots);
  return (static_cast<double>(runnable) / static_cast<double>(slots)) *
         std::pow(penalty, excess);
}

/// Emulated processor shared by every compute activity of a run.
///
/// All activities progress at the same rate 1/stretch(r), where r is the
/// number of activities currently inside run(). The arbiter integrates that
/// rate into a single virtual clock; an activity holding `w` ms of work is
/// complete once the virtual clock has advanced by `w` since it started.
/// Waiting is done on a condition variable so a single physical core can
/// host many emulated workers without distorting their timelines.
class ComputeArbiter {
 public:
  explicit ComputeArbiter(std::size_t slots = 1,
                          OversubscriptionMode mode = OversubscriptionMode::queueing,
                          double penalty = 1.0)
      : slots_(slots), mode_(mode), penalty_(penalty), last_(Clock::now()) {
    if (slots_ == 0) throw ConfigError("compute arbiter needs at least one slot");
    if (!(penalty_ >= 1.0)) throw ConfigError("oversubscription penalty must be >= 1");
  }

  ComputeArbiter(const ComputeArbiter&) = delete;
  ComputeArbiter& operator=(const ComputeArbiter&) = delete;

  double stretch(std::size_t runnable) const {
    return oversubscription_stretch(runnable, slots_, mode_, penalty_);
  }

  std::size_t slots() const { return slots_; }
  OversubscriptionMode mode() const { return mode_; }
  double penalty() const { return penalty_; }

  std::size_t runnable() const {
    std::lock_guard lk(m_);
    return runnable_;
  }

  /// Spends `work_ms` of emulated compute. `body` is real work executed first
  /// and counted against the same budget. Returns elapsed wall milliseconds.
  template <class Body>
  double run(double work_ms, Body&& body) {
    const auto start = Clock::now();
    double target = 0.0;
    {
      std::lock_guard lk(m_);
      advance_locked(start);
      ++runnable_;
      target = virtual_ms_ + std::max(0.0, work_ms);
    }
    cv_.notify_all();

    std::forward<Body>(body)();

    {
      std::unique_lock lk(m_);
      for (;;) {
        const auto now = Clock::now();
        advance_locked(now);
        const double remaining = target - virtual_ms_;
        if (remaining <= 1e-6) break;
        cv_.wait_until(lk, now + from_ms(remaining * stretch(runnable_)));
      }
      advance_locked(Clock::now());
      --runnable_;
    }
    cv_.notify_all();
    return ms_between(start, Clock::now());
  }

  double run(double work_ms) {
    return run(work_ms, [] {});
  }

 private:
  void advance_locked(Clock::time_point now) {
    if (now > last_) {
      virtual_ms_ += ms_between(last_, now) / stretch(runnable_);
      last_ = now;
    }
  }

  std::size_t slots_;
  OversubscriptionMode mode_;
  double penalty_;

  mutable std::mutex m_;
  std::condition_variable cv_;
  std::size_t runnable_ = 0;
  double virtual_ms_ = 0.0;
  Clock::time_point last_;
};

}  // namespace tb
