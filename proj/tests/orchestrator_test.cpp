#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "triggerbench/costmodel.hpp"
#include "triggerbench/orchestrator.hpp"

using namespace tb;
using namespace std::chrono_literals;

namespace {

// Small, fast workload: ~40 ms steps on 1 MiB payloads.
WorkloadSpec quick(double q = 0.4, int k = 1) {
  WorkloadSpec w;
  w.profile.name = "quick";
  w.profile.gen = {30, 0};
  w.profile.check = {2, 0};
  w.profile.io = {6, 0};
  w.profile.analysis = {25, 0};
  w.profile.trigger_latency_ms = 3;
  w.steps = 10;
  w.size_bytes = kMiB;
  w.qualified_fraction = q;
  w.instances = k;
  w.reps = 1;
  return w;
}

std::vector<std::pair<int, std::string>> expected_tasks(const WorkloadSpec& w) {
  std::vector<std::pair<int, std::string>> v;
  const auto sched = w.schedule();
  for (int s : sched.resolved())
    for (int j = 1; j <= w.instances; ++j) v.emplace_back(s, analysis_kind(j));
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(WorkerPool, QueueingCapsConcurrency) {
  WorkerPool pool(2, OversubscriptionMode::queueing);
  std::atomic<int> live{0}, peak{0};
  std::vector<TaskHandle> hs;
  for (int i = 0; i < 6; ++i)
    hs.push_back(launch_task(pool, [&] {
      const int now = ++live;
      int p = peak.load();
      while (now > p && !peak.compare_exchange_weak(p, now)) {
      }
      std::this_thread::sleep_for(15ms);
      --live;
    }));
  for (auto& h : hs) h.get();
  EXPECT_EQ(peak.load(), 2);
  EXPECT_EQ(pool.peak_running(), 2u);
}

TEST(WorkerPool, SlowdownStartsEverything) {
  WorkerPool pool(2, OversubscriptionMode::proportional_slowdown);
  std::vector<TaskHandle> hs;
  for (int i = 0; i < 5; ++i) hs.push_back(pool.launch([] { std::this_thread::sleep_for(20ms); }));
  for (auto& h : hs) h.get();
  EXPECT_EQ(pool.peak_running(), 5u);
}

TEST(WorkerPool, TaskErrorsReachTheHandle) {
  WorkerPool pool(1, OversubscriptionMode::queueing);
  auto h = pool.launch([] { throw std::runtime_error("boom"); });
  EXPECT_THROW(h.get(), std::runtime_error);
  EXPECT_THROW(WorkerPool(0, OversubscriptionMode::queueing), ConfigError);
}

TEST(Orchestrator, EveryPatternRunsTheSameAnalyses) {
  const auto w = quick(0.4, 2);
  const auto want = expected_tasks(w);
  for (auto p : kAllPatterns) {
    const auto r = run_pattern(w, p);
    EXPECT_EQ(r.executed, want) << to_string(p);
    EXPECT_EQ(r.analyses_completed, want.size());
    EXPECT_EQ(r.bytes_transferred, bytes_predicted(w, p)) << to_string(p);
  }
}

TEST(Orchestrator, NothingQualifiedRunsNothing) {
  const auto w = quick(0.0);
  for (auto p : kAllPatterns) {
    const auto r = run_pattern(w, p);
    EXPECT_TRUE(r.executed.empty());
    EXPECT_FALSE(r.stages.analysis.has_value());
    EXPECT_EQ(r.bytes_transferred, bytes_predicted(w, p));
  }
}

TEST(Orchestrator, LiveMakespanTracksPrediction) {
  const auto w = quick(0.5, 2);
  for (auto p : kAllPatterns) {
    const auto live = run_pattern(w, p).makespan_ms;
    const auto pred = predict(w, p).makespan_ms;
    EXPECT_NEAR(live, pred, 0.08 * pred) << to_string(p);
  }
}

TEST(Orchestrator, StageTimesMatchProfile) {
  const auto w = quick(0.5);
  const auto r = run_pattern(w, TriggerPattern::C);
  ASSERT_TRUE(r.stages.generation && r.stages.checking && r.stages.io && r.stages.analysis);
  EXPECT_NEAR(*r.stages.generation, 30, 3);
  EXPECT_NEAR(*r.stages.checking, 2, 1.5);
  EXPECT_NEAR(*r.stages.io, 6, 1.5);
  EXPECT_NEAR(*r.stages.analysis, 25, 3);
  EXPECT_THROW(measure_stage_times(std::vector<Event>{}), std::invalid_argument);
}

TEST(Orchestrator, MiddlewareLogsOneTriggerPerTask) {
  const auto w = quick(0.3, 3);
  const auto r = run_pattern(w, TriggerPattern::M);
  std::size_t triggers = 0, publishes = 0, gets = 0;
  for (const auto& e : r.events) {
    triggers += e.type == EventType::trigger;
    publishes += e.type == EventType::publish;
    gets += e.type == EventType::get;
  }
  EXPECT_EQ(publishes, 3u);
  EXPECT_EQ(triggers, 9u);
  EXPECT_EQ(gets, 9u);
  EXPECT_EQ(r.qualified_steps, 3u);
}

TEST(Orchestrator, MiddlewareNeedsAnAnalysisWorker) {
  auto w = quick();
  w.pool = 2;
  EXPECT_THROW(run_pattern(w, TriggerPattern::M), ConfigError);
  w.pool = 1;
  EXPECT_THROW(run_pattern(w, TriggerPattern::P), ConfigError);
}

TEST(Orchestrator, SlowdownModeRunsAllTasksAtOnce) {
  auto w = quick(1.0, 4);
  w.steps = 2;
  w.profile.analysis = {120, 0};
  w.oversubscription = OversubscriptionMode::proportional_slowdown;
  w.slowdown_penalty = 1.25;
  const auto live = run_pattern(w, TriggerPattern::M).makespan_ms;
  const auto pred = predict(w, TriggerPattern::M).makespan_ms;
  EXPECT_NEAR(live, pred, 0.08 * pred);
}

TEST(Orchestrator, GrayScottSourceDrivesChecks) {
  WorkloadSpec w = quick();
  w.source = CostSource::gray_scott;
  w.gray_scott.grid = 16;
  w.gray_scott.threshold = 0.5;
  w.gray_scott.direction = Direction::at_least;
  w.steps = 4;
  w.profile.gen = {0, 0};
  w.profile.analysis = {1, 0};
  for (auto p : kAllPatterns) {
    const auto r = run_pattern(w, p);
    // u stays near 1 for the first few steps, so every step qualifies.
    EXPECT_EQ(r.analyses_completed, 4u) << to_string(p);
    EXPECT_EQ(r.qualified_steps, 4u);
  }
}

TEST(Orchestrator, EventCsvHasOneRowPerEvent) {
  const auto r = run_pattern(quick(0.2), TriggerPattern::P);
  std::ostringstream os;
  write_events_csv(os, r.run_id, "P", r.events);
  const auto s = os.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), r.events.size() + 1);
  EXPECT_EQ(s.rfind(std::string(kEventCsvHeader), 0), 0u);
}
