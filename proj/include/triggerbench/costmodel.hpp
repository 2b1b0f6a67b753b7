#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "triggerbench/compute.hpp"
#include "triggerbench/event_log.hpp"
#include "triggerbench/indicator.hpp"
#include "triggerbench/workload.hpp"

namespace tb {

struct PredictedReport {
  std::string run_id;
  TriggerPattern pattern = TriggerPattern::P;
  double makespan_ms = 0.0;
  std::uint64_t bytes = 0;
  std::uint64_t analyses_completed = 0;
  std::vector<Event> events;  // ordered by start time
};

/// Parameters of one predicted run, resolved from a workload.
struct ModelInput {
  int steps = 1;
  std::vector<int> qualified;
  std::uint64_t size_bytes = 0;
  CostProfile profile;
  int instances = 1;
  int pool = 5;
  std::size_t capacity = 4;
  OversubscriptionMode mode = OversubscriptionMode::queueing;
  double penalty = 1.0;
  bool shared_link = true;

  static ModelInput from(const WorkloadSpec& w) {
    ModelInput m;
    m.steps = w.steps;
    m.qualified = w.schedule().resolved();
    m.size_bytes = w.size_bytes;
    m.profile = w.profile;
    m.instances = w.instances;
    m.pool = effective_pool(w.pool);
    m.capacity = w.staging_capacity;
    m.mode = w.oversubscription;
    m.penalty = w.slowdown_penalty;
    m.shared_link = w.shared_link;
    return m;
  }
};

namespace detail {

// Fluid simulation: every activity drains at a rate set by how many compute
// activities (or link transfers) are in flight, and time jumps to the next
// completion.
class FluidModel {
 public:
  FluidModel(const ModelInput& in, TriggerPattern pattern) : in_(in), pattern_(pattern) {
    if (in.pool < 2) throw ConfigError("pool must hold the producer and the consumer (size >= 2)");
    if (pattern == TriggerPattern::M && in.mode == OversubscriptionMode::queueing && in.pool - 2 < 1)
      throw ConfigError("pool leaves no worker for triggered analyses (need size >= 3)");
    qualified_.assign(static_cast<std::size_t>(in.steps) + 1, false);
    for (int q : in.qualified)
      if (q >= 1 && q <= in.steps) qualified_[static_cast<std::size_t>(q)] = true;
    const auto S = in.size_bytes;
    g_ = in.profile.gen.at(S);
    c_ = in.profile.check.at(S);
    io_ = in.profile.io.at(S);
    a_ = in.profile.analysis.at(S);
    sigma_ = in.profile.trigger_latency_ms;
    free_slots_ = in.pool - 2;
  }

  PredictedReport run() {
    prod_next();
    std::size_t iterations = 0;
    const std::size_t limit = 64 * (static_cast<std::size_t>(in_.steps) + 1) *
                              (static_cast<std::size_t>(in_.instances) + 4) + 1024;
    while (!acts_.empty()) {
      if (++iterations > limit) throw std::logic_error("cost model schedule failed to terminate");
      const double cr = compute_rate();
      const double lr = link_rate();
      auto rate = [&](const Act& x) { return x.slow ? cr : (x.link ? lr : 1.0); };
      double dt = std::numeric_limits<double>::infinity();
      for (const auto& x : acts_) dt = std::min(dt, x.rem / rate(x));
      for (auto& x : acts_) x.rem -= dt * rate(x);
      t_ += dt;
      std::vector<Act> fin;
      std::vector<Act> keep;
      for (auto& x : acts_) (x.rem <= 1e-9 ? fin : keep).push_back(std::move(x));
      acts_ = std::move(keep);
      for (auto& x : fin) {
        record(x);
        x.cb();
      }
    }
    if (prod_step_ <= in_.steps || !cap_waiters_.empty() || !task_q_.empty() || !launch_q_.empty())
      throw std::logic_error("cost model schedule deadlocked");

    PredictedReport r;
    r.pattern = pattern_;
    r.events = std::move(events_);
    std::stable_sort(r.events.begin(), r.events.end(), [](const Event& a, const Event& b) {
      return a.t_start_ms != b.t_start_ms ? a.t_start_ms < b.t_start_ms : a.t_end_ms < b.t_end_ms;
    });
    r.makespan_ms = t_;
    r.analyses_completed = analyses_;
    return r;
  }

 private:
  enum class Kind { gen, chk, put, get, sig, pull, ana };

  struct Act {
    Kind kind;
    int step;
    double rem;
    bool slow;
    bool link;
    double start;
    std::string who;
    std::function<void()> cb;
  };

  double compute_rate() const {
    std::size_t r = 0;
    for (const auto& x : acts_) r += x.slow ? 1 : 0;
    const auto W = static_cast<std::size_t>(in_.pool);
    if (in_.mode == OversubscriptionMode::proportional_slowdown && r > W)
      return 1.0 / ((static_cast<double>(r) / static_cast<double>(W)) *
                    std::pow(in_.penalty, static_cast<double>(r - W)));
    return 1.0;
  }

  double link_rate() const {
    std::size_t n = 0;
    for (const auto& x : acts_) n += x.link ? 1 : 0;
    return (in_.shared_link && n > 1) ? 1.0 / static_cast<double>(n) : 1.0;
  }

  void start(Kind k, int step, double dur, std::function<void()> cb, bool slow, bool link, std::string who) {
    acts_.push_back(Act{k, step, dur, slow, link, t_, std::move(who), std::move(cb)});
  }

  void record(const Act& x) {
    Event e;
    e.step = x.step;
    e.task_kind = x.who;
    e.t_start_ms = x.start;
    e.t_end_ms = t_;
    switch (x.kind) {
      case Kind::gen: e.type = EventType::compute; e.stage = Stage::gen; break;
      case Kind::chk: e.type = EventType::compute; e.stage = Stage::check; break;
      case Kind::put: e.type = EventType::put; e.stage = Stage::io_put; e.bytes = in_.size_bytes; break;
      case Kind::get:
      case Kind::pull: e.type = EventType::get; e.stage = Stage::io_get; e.bytes = in_.size_bytes; break;
      case Kind::sig: e.type = EventType::trigger; e.stage = Stage::trigger; break;
      case Kind::ana: e.type = EventType::compute; e.stage = Stage::analysis; ++analyses_; break;
    }
    events_.push_back(std::move(e));
  }

  bool is_qualified(int i) const { return qualified_[static_cast<std::size_t>(i)]; }

  // Producer: gen -> (P: check) -> put, one step at a time.
  void prod_next() {
    const int i = ++prod_step_;
    if (i > in_.steps) {
      consumer_poke();
      return;
    }
    start(Kind::gen, i, g_, [this, i] { prod_after_gen(i); }, true, false, "producer");
  }

  void prod_after_gen(int i) {
    if (pattern_ == TriggerPattern::P)
      start(Kind::chk, i, c_, [this, i] { prod_after_chk(i); }, true, false, "producer");
    else
      prod_put(i);
  }

  void prod_after_chk(int i) {
    if (is_qualified(i))
      prod_put(i);
    else
      prod_next();
  }

  void prod_put(int i) {
    if (resident_ >= in_.capacity) {
      cap_waiters_.push_back(i);
      return;
    }
    ++resident_;
    start(Kind::put, i, io_,
          [this, i] {
            avail_.push_back(i);
            consumer_poke();
            prod_next();
          },
          false, true, "producer");
  }

  void retire() {
    --resident_;
    if (!cap_waiters_.empty()) {
      const int i = cap_waiters_.front();
      cap_waiters_.pop_front();
      prod_put(i);
    }
  }

  // The persistent consumer (P, C) or middleware checker (M).
  void consumer_poke() {
    if (cons_busy_ || avail_.empty()) return;
    const int i = avail_.front();
    avail_.pop_front();
    cons_busy_ = true;
    if (pattern_ == TriggerPattern::M)
      start(Kind::chk, i, c_, [this, i] { mid_after_chk(i); }, true, false, "checker");
    else
      start(Kind::get, i, 0.0, [this, i] { cons_after_get(i); }, false, true, "consumer");
  }

  void cons_after_get(int i) {
    retire();
    if (pattern_ == TriggerPattern::C)
      start(Kind::chk, i, c_, [this, i] { cons_after_chk(i); }, true, false, "consumer");
    else
      cons_ana(i, 0);
  }

  void cons_after_chk(int i) {
    if (is_qualified(i))
      cons_ana(i, 0);
    else
      cons_free();
  }

  void cons_ana(int i, int j) {
    if (j < in_.instances)
      start(Kind::ana, i, a_, [this, i, j] { cons_ana(i, j + 1); }, true, false, analysis_kind(j + 1));
    else
      cons_free();
  }

  void cons_free() {
    cons_busy_ = false;
    consumer_poke();
  }

  void mid_after_chk(int i) {
    if (is_qualified(i)) {
      pulls_left_[i] = in_.instances;
      for (int j = 1; j <= in_.instances; ++j) launch_q_.push_back({i, j});
      launcher_poke();
    } else {
      retire();
    }
    cons_free();
  }

  void launcher_poke() {
    if (launcher_busy_ || launch_q_.empty()) return;
    const auto [i, j] = launch_q_.front();
    launch_q_.pop_front();
    launcher_busy_ = true;
    start(Kind::sig, i, sigma_, [this, i, j] { launched(i, j); }, false, false, analysis_kind(j));
  }

  void launched(int i, int j) {
    launcher_busy_ = false;
    task_q_.push_back({i, j});
    pool_poke();
    launcher_poke();
  }

  void pool_poke() {
    const bool slowdown = in_.mode == OversubscriptionMode::proportional_slowdown;
    while (!task_q_.empty() && (slowdown || free_slots_ > 0)) {
      const auto [i, j] = task_q_.front();
      task_q_.pop_front();
      if (!slowdown) --free_slots_;
      start(Kind::pull, i, io_, [this, i, j] { task_after_pull(i, j); }, false, true, analysis_kind(j));
    }
  }

  void task_after_pull(int i, int j) {
    if (--pulls_left_[i] == 0) retire();
    start(Kind::ana, i, a_, [this] { task_done(); }, true, false, analysis_kind(j));
  }

  void task_done() {
    if (in_.mode != OversubscriptionMode::proportional_slowdown) ++free_slots_;
    pool_poke();
  }

  const ModelInput& in_;
  TriggerPattern pattern_;
  std::vector<bool> qualified_;
  double g_ = 0, c_ = 0, io_ = 0, a_ = 0, sigma_ = 0;

  double t_ = 0.0;
  std::vector<Act> acts_;
  std::vector<Event> events_;
  std::uint64_t analyses_ = 0;

  int prod_step_ = 0;
  std::size_t resident_ = 0;
  std::deque<int> cap_waiters_;
  std::deque<int> avail_;
  bool cons_busy_ = false;
  std::map<int, int> pulls_left_;
  std::deque<std::pair<int, int>> launch_q_;
  bool launcher_busy_ = false;
  std::deque<std::pair<int, int>> task_q_;
  int free_slots_ = 0;
};

}  // namespace detail

inline std::uint64_t bytes_predicted(int steps, std::size_t qualified_steps, std::uint64_t size_bytes,
                                     TriggerPattern pattern, int instances = 1) {
  const std::uint64_t all = static_cast<std::uint64_t>(steps) * size_bytes;
  const std::uint64_t q = static_cast<std::uint64_t>(qualified_steps) * size_bytes;
  switch (pattern) {
    case TriggerPattern::P: return q;
    case TriggerPattern::C: return all;
    case TriggerPattern::M: return all + q * static_cast<std::uint64_t>(instances);
  }
  return 0;
}

inline std::uint64_t bytes_predicted(const WorkloadSpec& w, TriggerPattern pattern) {
  return bytes_predicted(w.steps, w.schedule().count(), w.size_bytes, pattern, w.instances);
}

inline PredictedReport predict(const ModelInput& in, TriggerPattern pattern) {
  in.profile.validate();
  detail::FluidModel model(in, pattern);
  auto r = model.run();
  r.bytes = bytes_predicted(in.steps, in.qualified.size(), in.size_bytes, pattern, in.instances);
  return r;
}

inline PredictedReport predict(const WorkloadSpec& w, TriggerPattern pattern) {
  w.validate();
  auto r = predict(ModelInput::from(w), pattern);
  r.run_id = "pred-" + std::string(to_string(pattern)) + "-q" + std::to_string(std::lround(w.qualified_fraction * 100)) +
             "-s" + std::to_string(w.size_bytes) + "-k" + std::to_string(w.instances);
  return r;
}

inline PredictedReport predict(const WorkloadSpec& w, const CostProfile& profile, TriggerPattern pattern) {
  WorkloadSpec x = w;
  x.profile = profile;
  return predict(x, pattern);
}

/// (max - min) / min over the given makespans.
inline double relative_spread(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo > 0 ? (*hi - *lo) / *lo : 0.0;
}

struct Ranking {
  std::vector<std::pair<TriggerPattern, double>> order;  // fastest first
  bool similar = false;
  double spread = 0.0;

  TriggerPattern top() const { return order.front().first; }
  std::string label() const { return similar ? "similar" : std::string(to_string(top())); }
};

inline Ranking rank(std::vector<std::pair<TriggerPattern, double>> means, double epsilon) {
  if (means.empty()) throw std::invalid_argument("nothing to rank");
  Ranking r;
  std::stable_sort(means.begin(), means.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  r.order = std::move(means);
  std::vector<double> v;
  for (const auto& m : r.order) v.push_back(m.second);
  r.spread = relative_spread(v);
  r.similar = r.order.size() > 1 && r.spread < epsilon;
  return r;
}

inline Ranking recommend(const WorkloadSpec& w, const CostProfile& profile) {
  std::vector<std::pair<TriggerPattern, double>> m;
  for (auto p : kAllPatterns) m.emplace_back(p, predict(w, profile, p).makespan_ms);
  return rank(std::move(m), w.similarity_epsilon);
}

inline Ranking recommend(const WorkloadSpec& w) { return recommend(w, w.profile); }

}  // namespace tb
