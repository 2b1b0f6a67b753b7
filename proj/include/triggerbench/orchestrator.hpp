#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <exception>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "triggerbench/compute.hpp"
#include "triggerbench/error.hpp"
#include "triggerbench/event_log.hpp"
#include "triggerbench/indicator.hpp"
#include "triggerbench/payload.hpp"
#include "triggerbench/simkernel.hpp"
#include "triggerbench/staging.hpp"
#include "triggerbench/workload.hpp"

namespace tb {

using TaskHandle = std::shared_future<void>;

/// Runs launched tasks on at most `slots` threads at once (queueing), or
/// starts every task immediately (proportional slowdown).
class WorkerPool {
 public:
  WorkerPool(std::size_t slots, OversubscriptionMode mode) : slots_(slots), mode_(mode) {
    if (slots_ == 0) throw ConfigError("worker pool has no free workers for analysis tasks");
  }
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;
  ~WorkerPool() { wait_all(); }

  TaskHandle launch(std::function<void()> fn) {
    auto job = std::make_shared<Job>();
    job->fn = std::move(fn);
    TaskHandle h = job->done.get_future().share();
    std::lock_guard lk(m_);
    if (mode_ == OversubscriptionMode::proportional_slowdown || running_ < slots_) {
      ++running_;
      peak_ = std::max(peak_, running_);
      threads_.emplace_back([this, job] { work(job); });
    } else {
      pending_.push_back(std::move(job));
    }
    return h;
  }

  void wait_all() {
    for (;;) {
      std::vector<std::thread> ts;
      {
        std::lock_guard lk(m_);
        ts.swap(threads_);
      }
      if (ts.empty()) return;
      for (auto& t : ts) t.join();
    }
  }

  std::size_t slots() const { return slots_; }
  OversubscriptionMode mode() const { return mode_; }
  std::size_t running() const {
    std::lock_guard lk(m_);
    return running_;
  }
  std::size_t queued() const {
    std::lock_guard lk(m_);
    return pending_.size();
  }
  std::size_t peak_running() const {
    std::lock_guard lk(m_);
    return peak_;
  }

 private:
  struct Job {
    std::function<void()> fn;
    std::promise<void> done;
  };

  void work(std::shared_ptr<Job> job) {
    while (job) {
      try {
        job->fn();
        job->done.set_value();
      } catch (...) {
        job->done.set_exception(std::current_exception());
      }
      std::lock_guard lk(m_);
      if (pending_.empty()) {
        --running_;
        job.reset();
      } else {
        job = std::move(pending_.front());
        pending_.pop_front();
      }
    }
  }

  std::size_t slots_;
  OversubscriptionMode mode_;
  mutable std::mutex m_;
  std::deque<std::shared_ptr<Job>> pending_;
  std::vector<std::thread> threads_;
  std::size_t running_ = 0;
  std::size_t peak_ = 0;
};

inline TaskHandle launch_task(WorkerPool& pool, std::function<void()> body) { return pool.launch(std::move(body)); }

struct AnalysisTaskSpec {
  std::string kind;
  double fixed_cost_ms = 0.0;
  double cost_per_mb_ms = 0.0;
  int instances = 1;

  double cost_ms(std::uint64_t bytes) const { return Affine{fixed_cost_ms, cost_per_mb_ms}.at(bytes); }
};

struct StageProfile {
  std::optional<double> generation;
  std::optional<double> checking;
  std::optional<double> io;
  std::optional<double> analysis;
};

struct RunReport {
  std::string run_id;
  TriggerPattern pattern = TriggerPattern::P;
  double makespan_ms = 0.0;
  StageProfile stages;
  std::uint64_t bytes_transferred = 0;
  std::uint64_t analyses_completed = 0;
  std::uint64_t qualified_steps = 0;
  std::vector<std::pair<int, std::string>> executed;  // (step, analysis kind), sorted
  std::vector<Event> events;
};

inline StageProfile measure_stage_times(const std::vector<Event>& events) {
  if (events.empty()) throw std::invalid_argument("cannot measure stage times of an empty event log");
  struct Acc {
    double sum = 0;
    std::size_t n = 0;
    std::optional<double> mean() const { return n ? std::optional<double>(sum / n) : std::nullopt; }
  } gen, chk, put, get, ana;
  for (const auto& e : events) {
    Acc* a = nullptr;
    switch (e.stage) {
      case Stage::gen: a = &gen; break;
      case Stage::check: a = &chk; break;
      case Stage::io_put: a = &put; break;
      case Stage::io_get: a = &get; break;
      case Stage::analysis: a = &ana; break;
      default: break;
    }
    if (a) {
      a->sum += e.duration_ms();
      ++a->n;
    }
  }
  // Producer-side puts carry the transfer cost; consumer gets may be free handoffs.
  return {gen.mean(), chk.mean(), put.n ? put.mean() : get.mean(), ana.mean()};
}

inline StageProfile measure_stage_times(const RunReport& r) { return measure_stage_times(r.events); }

// First generation start to the last recorded activity.
inline double makespan_of(const std::vector<Event>& events) {
  double first = std::numeric_limits<double>::infinity();
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& e : events) {
    if (e.stage == Stage::gen) first = std::min(first, e.t_start_ms);
    if (e.type != EventType::eos) last = std::max(last, e.t_end_ms);
  }
  return std::isfinite(first) && std::isfinite(last) ? last - first : 0.0;
}

/// Produces and checks steps for a run.
class StepSource {
 public:
  virtual ~StepSource() = default;
  virtual StepPayload produce(int step, ComputeArbiter& cpu) = 0;
  virtual IndicatorResult check(const StepPayload& p, ComputeArbiter& cpu) = 0;
  virtual std::uint64_t payload_bytes() const = 0;
};

class SyntheticSource final : public StepSource {
 public:
  explicit SyntheticSource(const WorkloadSpec& w)
      : spec_{w.size_bytes, w.profile.gen.at(w.size_bytes), w.steps},
        check_ms_(w.profile.check.at(w.size_bytes)),
        schedule_(w.schedule()),
        seed_(w.seed),
        buffers_(BufferPool::create()) {
    buffers_->reserve(w.staging_capacity + 3, w.size_bytes);
  }

  StepPayload produce(int step, ComputeArbiter& cpu) override {
    return synth_produce(spec_, step, seed_, cpu, buffers_.get());
  }
  IndicatorResult check(const StepPayload& p, ComputeArbiter& cpu) override {
    return scripted_check(schedule_, p.step_index, check_ms_, cpu);
  }
  std::uint64_t payload_bytes() const override { return spec_.payload_bytes; }

 private:
  SyntheticProducerSpec spec_;
  double check_ms_;
  QualifiedSchedule schedule_;
  std::uint64_t seed_;
  std::shared_ptr<BufferPool> buffers_;
};

/// Steps a real Gray-Scott model and checks the histogram peak of u.
class GrayScottStepSource final : public StepSource {
 public:
  explicit GrayScottStepSource(const WorkloadSpec& w)
      : cfg_(w.gray_scott),
        sim_(Dims{cfg_.grid, cfg_.grid, cfg_.grid}, cfg_.params, w.seed),
        buffers_(BufferPool::create()) {}

  StepPayload produce(int step, ComputeArbiter& cpu) override {
    auto buf = buffers_->acquire(payload_bytes());
    cpu.run(0.0, [&] {
      sim_.step(static_cast<std::size_t>(cfg_.substeps));
      const auto u = sim_.u().values();
      std::memcpy(buf->span().data(), u.data(), u.size_bytes());
    });
    StepPayload p;
    p.step_index = step;
    p.variable = "u";
    p.bytes = std::move(buf);
    p.produced_at = Clock::now();
    return p;
  }

  IndicatorResult check(const StepPayload& p, ComputeArbiter& cpu) override {
    IndicatorResult r;
    cpu.run(0.0, [&] {
      const std::span<const double> vals(reinterpret_cast<const double*>(p.bytes->data()),
                                         p.size() / sizeof(double));
      const auto t0 = Clock::now();
      r.peak_position = peak_position(build_histogram(vals, cfg_.histogram.lo, cfg_.histogram.hi,
                                                      cfg_.histogram.bins));
      r.qualified = passes(r.peak_position, cfg_.threshold, cfg_.direction);
      r.check_cost_ms = ms_between(t0, Clock::now());
    });
    r.step_index = p.step_index;
    return r;
  }

  std::uint64_t payload_bytes() const override { return sim_.u().size() * sizeof(double); }

 private:
  GrayScottSource cfg_;
  GrayScott sim_;
  std::shared_ptr<BufferPool> buffers_;
};

inline std::unique_ptr<StepSource> make_source(const WorkloadSpec& w) {
  if (w.source == CostSource::gray_scott) return std::make_unique<GrayScottStepSource>(w);
  return std::make_unique<SyntheticSource>(w);
}

inline constexpr const char* kVariable = "u";
inline constexpr const char* kQualifiedTopic = "qualified/u";

namespace detail {

// Keeps the first exception thrown by any worker thread.
class FirstError {
 public:
  void capture() {
    std::lock_guard lk(m_);
    if (!err_) err_ = std::current_exception();
  }
  void rethrow() const {
    if (err_) std::rethrow_exception(err_);
  }

 private:
  std::mutex m_;
  std::exception_ptr err_;
};

class RunContext {
 public:
  RunContext(const WorkloadSpec& w, TriggerPattern pattern, int rep)
      : w_(w),
        pattern_(pattern),
        pool_size_(static_cast<std::size_t>(effective_pool(w.pool))),
        cpu_(pool_size_, w.oversubscription, w.slowdown_penalty),
        staging_(StagingConfig{w.staging_capacity, w.profile.io.fixed_ms, w.profile.io.per_mib_ms, w.shared_link},
                 &log_),
        source_(make_source(w)),
        analysis_ms_(w.profile.analysis.at(source_->payload_bytes())) {
    run_id_ = std::string(to_string(pattern)) + "-q" + std::to_string(std::lround(w.qualified_fraction * 100)) +
              "-s" + std::to_string(w.size_bytes) + "-k" + std::to_string(w.instances) + "-r" + std::to_string(rep);
  }

  RunReport run() {
    if (pool_size_ < 2) throw ConfigError("pool must hold the producer and the consumer (size >= 2)");
    switch (pattern_) {
      case TriggerPattern::P:
      case TriggerPattern::C: run_with_consumer(); break;
      case TriggerPattern::M: run_with_middleware(); break;
    }
    return finish();
  }

 private:
  void producer() {
    try {
      for (int i = 1; i <= w_.steps; ++i) {
        double t0 = log_.now_ms();
        StepPayload p = source_->produce(i, cpu_);
        double t1 = log_.now_ms();
        log_.add(EventType::compute, Stage::gen, i, "producer", 0, t0, t1);
        if (pattern_ == TriggerPattern::P) {
          const auto r = source_->check(p, cpu_);
          const double t2 = log_.now_ms();
          log_.add(EventType::compute, Stage::check, i, "producer", 0, t1, t2);
          if (!r.qualified) continue;
          qualified_.fetch_add(1);
          p.qualified_hint = true;
        }
        staging_.put(std::move(p));
      }
    } catch (...) {
      errors_.capture();
    }
    staging_.mark_end_of_stream(kVariable);
  }

  void analyse(int step, const std::string& kind) {
    const double t0 = log_.now_ms();
    cpu_.run(analysis_ms_);
    log_.add(EventType::compute, Stage::analysis, step, kind, 0, t0, log_.now_ms());
    std::lock_guard lk(m_);
    executed_.emplace_back(step, kind);
  }

  // P and C: one long-running consumer; C also checks each step it receives.
  void consumer() {
    try {
      const bool filtered = pattern_ == TriggerPattern::P;
      int cursor = 0;
      while (auto p = staging_.get_next(kVariable, cursor, filtered, Access::handoff, "consumer")) {
        cursor = p->step_index;
        staging_.release(kVariable, cursor);
        if (!filtered) {
          const double t0 = log_.now_ms();
          const auto r = source_->check(*p, cpu_);
          log_.add(EventType::compute, Stage::check, cursor, "consumer", 0, t0, log_.now_ms());
          if (!r.qualified) continue;
          qualified_.fetch_add(1);
        }
        for (int j = 1; j <= w_.instances; ++j) analyse(cursor, analysis_kind(j));
      }
    } catch (...) {
      errors_.capture();
      drain_after_error();
    }
  }

  void run_with_consumer() {
    std::thread prod([this] { producer(); });
    std::thread cons([this] { consumer(); });
    prod.join();
    cons.join();
  }

  void run_with_middleware() {
    const std::size_t task_slots =
        w_.oversubscription == OversubscriptionMode::queueing ? pool_size_ - 2 : pool_size_;
    if (task_slots < 1) throw ConfigError("pool leaves no worker for triggered analyses (need size >= 3)");
    WorkerPool pool(task_slots, w_.oversubscription);

    TriggerRegistry registry([this](TriggeredTask t) {
      {
        std::lock_guard lk(launch_m_);
        launch_q_.push_back(std::move(t));
      }
      launch_cv_.notify_one();
    });
    for (int j = 1; j <= w_.instances; ++j) registry.subscribe({kQualifiedTopic, {analysis_kind(j), 1}});

    std::thread prod([this] { producer(); });
    std::thread checker([&] {
      try {
        int cursor = 0;
        while (auto p = staging_.get_next(kVariable, cursor, false, Access::in_place, "checker")) {
          cursor = p->step_index;
          const double t0 = log_.now_ms();
          const auto r = source_->check(*p, cpu_);
          const double t1 = log_.now_ms();
          log_.add(EventType::compute, Stage::check, cursor, "checker", 0, t0, t1);
          if (!r.qualified) {
            staging_.release(kVariable, cursor);
            continue;
          }
          qualified_.fetch_add(1);
          {
            std::lock_guard lk(m_);
            pulls_left_[cursor] = static_cast<int>(registry.subscriptions());
          }
          registry.publish(kQualifiedTopic, cursor);
          log_.add(EventType::publish, Stage::trigger, cursor, "checker", 0, t1, log_.now_ms());
        }
      } catch (...) {
        errors_.capture();
        drain_after_error();
      }
      {
        std::lock_guard lk(launch_m_);
        checker_done_ = true;
      }
      launch_cv_.notify_one();
    });

    // Serial launcher: each triggered task costs one trigger latency before it starts.
    std::thread launcher([&] {
      for (;;) {
        TriggeredTask t;
        {
          std::unique_lock lk(launch_m_);
          launch_cv_.wait(lk, [&] { return checker_done_ || !launch_q_.empty(); });
          if (launch_q_.empty()) break;
          t = std::move(launch_q_.front());
          launch_q_.pop_front();
        }
        const double t0 = log_.now_ms();
        std::this_thread::sleep_for(from_ms(w_.profile.trigger_latency_ms));
        log_.add(EventType::trigger, Stage::trigger, t.step, t.action.analysis_kind, 0, t0, log_.now_ms());
        handles_.push_back(launch_task(pool, [this, t] { triggered_analysis(t.step, t.action.analysis_kind); }));
      }
    });

    prod.join();
    checker.join();
    launcher.join();
    pool.wait_all();
    for (auto& h : handles_) {
      try {
        h.get();
      } catch (...) {
        errors_.capture();
      }
    }
  }

  void triggered_analysis(int step, const std::string& kind) {
    staging_.get(kVariable, step, Access::transfer, kind);
    bool last = false;
    {
      std::lock_guard lk(m_);
      last = --pulls_left_[step] == 0;
    }
    if (last) staging_.release(kVariable, step);
    analyse(step, kind);
  }

  // Keeps the producer from blocking forever on a full store after a failure.
  void drain_after_error() {
    int cursor = 0;
    while (auto p = staging_.get_next(kVariable, cursor, false, Access::in_place)) {
      cursor = p->step_index;
      staging_.release(kVariable, cursor);
    }
  }

  RunReport finish() {
    errors_.rethrow();
    RunReport r;
    r.run_id = run_id_;
    r.pattern = pattern_;
    r.events = log_.snapshot();
    r.makespan_ms = makespan_of(r.events);
    r.stages = measure_stage_times(r.events);
    const auto st = staging_.stats();
    r.bytes_transferred = pattern_ == TriggerPattern::M ? st.bytes_put + st.bytes_got : st.bytes_put;
    r.executed = executed_;
    std::sort(r.executed.begin(), r.executed.end());
    r.analyses_completed = r.executed.size();
    r.qualified_steps = qualified_.load();
    return r;
  }

  const WorkloadSpec& w_;
  TriggerPattern pattern_;
  std::size_t pool_size_;
  EventLog log_;
  ComputeArbiter cpu_;
  StagingService staging_;
  std::unique_ptr<StepSource> source_;
  double analysis_ms_;
  std::string run_id_;
  FirstError errors_;

  std::mutex m_;
  std::vector<std::pair<int, std::string>> executed_;
  std::map<int, int> pulls_left_;
  std::atomic<std::uint64_t> qualified_{0};

  std::mutex launch_m_;
  std::condition_variable launch_cv_;
  std::deque<TriggeredTask> launch_q_;
  bool checker_done_ = false;
  std::vector<TaskHandle> handles_;
};

}  // namespace detail

/// Executes one live run of `pattern` over `workload`.
inline RunReport run_pattern(const WorkloadSpec& workload, TriggerPattern pattern, int rep = 0) {
  workload.validate();
  detail::RunContext ctx(workload, pattern, rep);
  return ctx.run();
}

inline RunReport run_pattern_p(const WorkloadSpec& w, int rep = 0) { return run_pattern(w, TriggerPattern::P, rep); }
inline RunReport run_pattern_c(const WorkloadSpec& w, int rep = 0) { return run_pattern(w, TriggerPattern::C, rep); }
inline RunReport run_pattern_m(const WorkloadSpec& w, int rep = 0) { return run_pattern(w, TriggerPattern::M, rep); }

}  // namespace tb
