#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "triggerbench/clock.hpp"

namespace tb {

enum class EventType { compute, put, get, publish, trigger, eos };
enum class Stage { gen, check, io_put, io_get, trigger, analysis, none };

inline std::string_view to_string(EventType e) {
  switch (e) {
    case EventType::compute: return "compute";
    case EventType::put: return "put";
    case EventType::get: return "get";
    case EventType::publish: return "publish";
    case EventType::trigger: return "trigger";
    case EventType::eos: return "eos";
  }
  return "?";
}

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::gen: return "gen";
    case Stage::check: return "check";
    case Stage::io_put: return "io_put";
    case Stage::io_get: return "io_get";
    case Stage::trigger: return "trigger";
    case Stage::analysis: return "analysis";
    case Stage::none: return "";
  }
  return "?";
}

struct Event {
  EventType type = EventType::compute;
  Stage stage = Stage::none;
  int step = 0;
  std::string task_kind;
  std::uint64_t bytes = 0;
  double t_start_ms = 0.0;
  double t_end_ms = 0.0;

  double duration_ms() const { return t_end_ms - t_start_ms; }
};

inline constexpr std::string_view kEventCsvHeader =
    "run_id,pattern,event_type,stage,step,task_kind,bytes,t_start_ms,t_end_ms";

/// Append-only, thread-safe record of one run's events.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(RunClock clock) : clock_(clock) {}

  const RunClock& clock() const { return clock_; }
  double now_ms() const { return clock_.now_ms(); }

  void add(Event e) {
    std::lock_guard lk(m_);
    events_.push_back(std::move(e));
  }

  void add(EventType type, Stage stage, int step, std::string kind, std::uint64_t bytes,
           double t0, double t1) {
    add(Event{type, stage, step, std::move(kind), bytes, t0, t1});
  }

  // Events ordered by start time, ties by end time.
  std::vector<Event> snapshot() const {
    std::vector<Event> out;
    {
      std::lock_guard lk(m_);
      out = events_;
    }
    std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
      return a.t_start_ms != b.t_start_ms ? a.t_start_ms < b.t_start_ms : a.t_end_ms < b.t_end_ms;
    });
    return out;
  }

  std::size_t size() const {
    std::lock_guard lk(m_);
    return events_.size();
  }

 private:
  RunClock clock_;
  mutable std::mutex m_;
  std::vector<Event> events_;
};

inline void write_events_csv(std::ostream& os, std::string_view run_id, std::string_view pattern,
                             const std::vector<Event>& events, bool header = true) {
  if (header) os << kEventCsvHeader << '\n';
  char buf[64];
  for (const auto& e : events) {
    os << run_id << ',' << pattern << ',' << to_string(e.type) << ',' << to_string(e.stage) << ','
       << e.step << ',' << e.task_kind << ',' << e.bytes << ',';
    std::snprintf(buf, sizeof buf, "%.3f,%.3f", e.t_start_ms, e.t_end_ms);
    os << buf << '\n';
  }
}

}  // namespace tb
