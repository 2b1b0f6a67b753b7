#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "triggerbench/clock.hpp"
#include "triggerbench/compute.hpp"
#include "triggerbench/error.hpp"
#include "triggerbench/event_log.hpp"
#include "triggerbench/payload.hpp"

namespace tb {

struct StagingConfig {
  std::size_t capacity_per_variable = 4;
  double fixed_latency_ms = 0.0;
  double ms_per_mib = 0.0;
  // Concurrent transfers share one link's bandwidth instead of each getting it whole.
  bool shared_link = false;

  double transfer_ms(std::uint64_t bytes) const {
    return fixed_latency_ms + ms_per_mib * static_cast<double>(bytes) / static_cast<double>(kMiB);
  }

  void validate() const {
    if (capacity_per_variable < 1) throw ConfigError("staging capacity must be at least one step");
    if (fixed_latency_ms < 0 || ms_per_mib < 0) throw ConfigError("staging latency must be non-negative");
  }
};

/// How a reader reaches a staged payload.
enum class Access {
  handoff,   // payload was already shipped by the put; counted, no extra cost
  transfer,  // reader pulls it across the link; counted and charged
  in_place,  // reader lives beside the store; neither counted nor charged
};

struct StagingStats {
  std::uint64_t bytes_put = 0;
  std::uint64_t bytes_got = 0;
  std::uint64_t put_count = 0;
  std::uint64_t get_count = 0;
  std::vector<double> put_latency_ms;
  std::vector<double> get_latency_ms;
};

/// Step-addressed in-memory store with bounded residency per variable.
///
/// A payload stays resident until release(); put blocks while a variable has
/// `capacity_per_variable` resident steps.
class StagingService {
 public:
  explicit StagingService(StagingConfig cfg = {}, EventLog* log = nullptr)
      : cfg_(cfg), log_(log), link_(1, OversubscriptionMode::proportional_slowdown, 1.0) {
    cfg_.validate();
  }

  StagingService(const StagingService&) = delete;
  StagingService& operator=(const StagingService&) = delete;

  const StagingConfig& config() const { return cfg_; }

  void put(StepPayload p, const std::string& writer = "producer") {
    if (p.step_index < 1) throw ConfigError("step index must be >= 1");
    if (p.size() == 0) throw ConfigError("payload must not be empty");
    const std::uint64_t n = p.size();
    const int step = p.step_index;
    const std::string var = p.variable;
    {
      std::unique_lock lk(m_);
      auto& v = vars_[var];
      if (v.seen.count(step))
        throw DuplicateStep("step " + std::to_string(step) + " of '" + var + "' already staged");
      v.seen.insert(step);
      space_cv_.wait(lk, [&] { return v.resident < cfg_.capacity_per_variable; });
      ++v.resident;
    }
    const double t0 = now_ms();
    emulate_transfer(n);
    const double t1 = now_ms();
    {
      std::lock_guard lk(m_);
      auto& v = vars_[var];
      v.ready.emplace(step, std::move(p));
      stats_.bytes_put += n;
      ++stats_.put_count;
      stats_.put_latency_ms.push_back(t1 - t0);
    }
    data_cv_.notify_all();
    if (log_) log_->add(EventType::put, Stage::io_put, step, writer, n, t0, t1);
  }

  /// Lowest staged step after `after_step`; nullopt once the stream has ended
  /// and nothing further matches. Recorded latency excludes the wait for data.
  std::optional<StepPayload> get_next(const std::string& variable, int after_step, bool only_qualified,
                                      Access access = Access::handoff, const std::string& reader = {}) {
    std::optional<StepPayload> found;
    {
      std::unique_lock lk(m_);
      auto& v = vars_[variable];
      data_cv_.wait(lk, [&] {
        for (auto it = v.ready.upper_bound(after_step); it != v.ready.end(); ++it) {
          if (!only_qualified || it->second.qualified_hint.value_or(false)) {
            found = it->second;
            return true;
          }
        }
        return v.ended;
      });
    }
    if (!found) return std::nullopt;
    finish_get(*found, access, now_ms(), reader);
    return found;
  }

  StepPayload get(const std::string& variable, int step, Access access = Access::transfer,
                  const std::string& reader = {}) {
    const double t0 = now_ms();
    std::optional<StepPayload> found;
    {
      std::lock_guard lk(m_);
      auto& v = vars_[variable];
      if (auto it = v.ready.find(step); it != v.ready.end()) found = it->second;
    }
    if (!found) throw ConfigError("step " + std::to_string(step) + " of '" + variable + "' is not staged");
    finish_get(*found, access, t0, reader);
    return *found;
  }

  /// Drops a step from the store and frees its slot for the producer.
  void release(const std::string& variable, int step) {
    {
      std::lock_guard lk(m_);
      auto& v = vars_[variable];
      auto it = v.ready.find(step);
      if (it == v.ready.end()) return;
      v.ready.erase(it);
      --v.resident;
    }
    space_cv_.notify_all();
  }

  void mark_end_of_stream(const std::string& variable) {
    const double t = now_ms();
    {
      std::lock_guard lk(m_);
      vars_[variable].ended = true;
    }
    data_cv_.notify_all();
    if (log_) log_->add(EventType::eos, Stage::none, 0, variable, 0, t, t);
  }

  std::size_t resident(const std::string& variable) const {
    std::lock_guard lk(m_);
    auto it = vars_.find(variable);
    return it == vars_.end() ? 0 : it->second.resident;
  }

  StagingStats stats() const {
    std::lock_guard lk(m_);
    return stats_;
  }

 private:
  struct Var {
    std::map<int, StepPayload> ready;
    std::set<int> seen;
    std::size_t resident = 0;
    bool ended = false;
  };

  double now_ms() const { return log_ ? log_->now_ms() : clock_.now_ms(); }

  void emulate_transfer(std::uint64_t bytes) {
    const double ms = cfg_.transfer_ms(bytes);
    if (ms <= 0) return;
    if (cfg_.shared_link)
      link_.run(ms);
    else
      std::this_thread::sleep_for(from_ms(ms));
  }

  void finish_get(const StepPayload& p, Access access, double t0, const std::string& reader) {
    if (access == Access::transfer) emulate_transfer(p.size());
    const double t1 = now_ms();
    if (access == Access::in_place) return;
    {
      std::lock_guard lk(m_);
      stats_.bytes_got += p.size();
      ++stats_.get_count;
      stats_.get_latency_ms.push_back(t1 - t0);
    }
    if (log_) log_->add(EventType::get, Stage::io_get, p.step_index, reader, p.size(), t0, t1);
  }

  StagingConfig cfg_;
  EventLog* log_;
  RunClock clock_;
  ComputeArbiter link_;
  mutable std::mutex m_;
  std::condition_variable space_cv_;
  std::condition_variable data_cv_;
  std::unordered_map<std::string, Var> vars_;
  StagingStats stats_;
};

struct TaskTemplate {
  std::string analysis_kind;
  std::size_t workers = 1;
};

struct TopicSubscription {
  std::string topic;
  TaskTemplate action;
};

struct TriggeredTask {
  int subscription_id = 0;
  std::string topic;
  int step = 0;
  TaskTemplate action;
};

/// Exact-topic pub/sub. Each publish hands one TriggeredTask per matching
/// subscription to the sink; the sink must not block.
class TriggerRegistry {
 public:
  using Sink = std::function<void(TriggeredTask)>;

  explicit TriggerRegistry(Sink sink = {}) : sink_(std::move(sink)) {}

  void set_sink(Sink sink) {
    std::lock_guard lk(m_);
    sink_ = std::move(sink);
  }

  int subscribe(TopicSubscription sub) {
    if (sub.topic.empty()) throw ConfigError("subscription topic must not be empty");
    std::lock_guard lk(m_);
    subs_.push_back({next_id_, std::move(sub)});
    return next_id_++;
  }

  std::size_t publish(const std::string& topic, int step) {
    std::vector<TriggeredTask> hits;
    Sink sink;
    {
      std::lock_guard lk(m_);
      ++publishes_;
      for (const auto& [id, s] : subs_)
        if (s.topic == topic) hits.push_back({id, topic, step, s.action});
      instantiated_ += hits.size();
      sink = sink_;
    }
    if (sink)
      for (auto& h : hits) sink(std::move(h));
    return hits.size();
  }

  std::size_t subscriptions() const {
    std::lock_guard lk(m_);
    return subs_.size();
  }
  std::uint64_t publishes() const {
    std::lock_guard lk(m_);
    return publishes_;
  }
  std::uint64_t instantiated() const {
    std::lock_guard lk(m_);
    return instantiated_;
  }

 private:
  mutable std::mutex m_;
  Sink sink_;
  std::vector<std::pair<int, TopicSubscription>> subs_;
  int next_id_ = 1;
  std::uint64_t publishes_ = 0;
  std::uint64_t instantiated_ = 0;
};

}  // namespace tb
