#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "triggerbench/costmodel.hpp"

using namespace tb;

namespace {

CostProfile flat(const oracle::Costs& x) {
  CostProfile p;
  p.name = "flat";
  p.gen = {x.g, 0};
  p.check = {x.c, 0};
  p.io = {x.io, 0};
  p.analysis = {x.a, 0};
  p.trigger_latency_ms = x.sigma;
  return p;
}

ModelInput input(int n, std::vector<int> qualified, const oracle::Costs& x, int k = 1, int pool = 5,
                 std::size_t K = 4) {
  ModelInput m;
  m.steps = n;
  m.qualified = std::move(qualified);
  m.size_bytes = kMiB;
  m.profile = flat(x);
  m.instances = k;
  m.pool = pool;
  m.capacity = K;
  m.shared_link = false;
  return m;
}

std::vector<bool> mask(int n, const std::vector<int>& q) {
  std::vector<bool> m(static_cast<std::size_t>(n) + 1, false);
  for (int i : q) m[static_cast<std::size_t>(i)] = true;
  return m;
}

double ms(const ModelInput& in, TriggerPattern p) { return predict(in, p).makespan_ms; }

}  // namespace

TEST(CostModel, ClosedFormWithNothingQualified) {
  const oracle::Costs x{100, 3, 20, 50, 7};
  const auto in = input(10, {}, x);
  EXPECT_NEAR(ms(in, TriggerPattern::P), 10 * (100 + 3), 1e-6);
  EXPECT_NEAR(ms(in, TriggerPattern::C), 10 * (100 + 20) + 3, 1e-6);
  EXPECT_NEAR(ms(in, TriggerPattern::M), 10 * (100 + 20) + 3, 1e-6);
}

TEST(CostModel, ClosedFormWithLastStepQualified) {
  const oracle::Costs x{100, 3, 20, 50, 7};
  const auto in = input(10, {10}, x, 2);
  EXPECT_NEAR(ms(in, TriggerPattern::P), 10 * 103 + 20 + 2 * 50, 1e-6);
  EXPECT_NEAR(ms(in, TriggerPattern::C), 10 * 120 + 3 + 2 * 50, 1e-6);
  // Second task launches one sigma later and finishes last.
  EXPECT_NEAR(ms(in, TriggerPattern::M), 10 * 120 + 3 + 2 * 7 + 20 + 50, 1e-6);
}

TEST(CostModel, AnalysisDominatedConsumerFormulas) {
  // Every step qualified and analysis much slower than production: the
  // consumer is the bottleneck from the first arrival onwards.
  const oracle::Costs x{10, 1, 2, 100, 0};
  const int n = 6;
  std::vector<int> all{1, 2, 3, 4, 5, 6};
  const auto in = input(n, all, x);
  EXPECT_NEAR(ms(in, TriggerPattern::P), (10 + 1 + 2) + n * 100, 1e-6);
  EXPECT_NEAR(ms(in, TriggerPattern::C), (10 + 2) + n * (1 + 100), 1e-6);
}

TEST(CostModelProperty, MatchesPipelineOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.5, 60.0);
  std::uniform_int_distribution<int> N(1, 12), Kd(1, 5), kd(1, 3);
  for (int trial = 0; trial < 300; ++trial) {
    const oracle::Costs x{U(rng), U(rng) / 4, U(rng), U(rng), U(rng) / 4};
    const int n = N(rng), k = kd(rng);
    const std::size_t K = static_cast<std::size_t>(Kd(rng));
    std::vector<int> q;
    for (int i = 1; i <= n; ++i)
      if (rng() % 2) q.push_back(i);
    const auto in = input(n, q, x, k, 5, K);
    const auto m = mask(n, q);
    EXPECT_NEAR(ms(in, TriggerPattern::P), oracle::pipeline_makespan(true, n, m, x, k, K), 1e-6) << trial;
    EXPECT_NEAR(ms(in, TriggerPattern::C), oracle::pipeline_makespan(false, n, m, x, k, K), 1e-6) << trial;
  }
}

TEST(CostModelProperty, MatchesMiddlewareOracle) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(0.5, 60.0);
  std::uniform_int_distribution<int> N(1, 10), Kd(1, 4), kd(1, 3), Wd(3, 6);
  for (int trial = 0; trial < 300; ++trial) {
    const oracle::Costs x{U(rng), U(rng) / 4, U(rng), U(rng), U(rng) / 4};
    const int n = N(rng), k = kd(rng), W = Wd(rng);
    const std::size_t K = static_cast<std::size_t>(Kd(rng));
    std::vector<int> q;
    for (int i = 1; i <= n; ++i)
      if (rng() % 2) q.push_back(i);
    const auto in = input(n, q, x, k, W, K);
    EXPECT_NEAR(ms(in, TriggerPattern::M), oracle::middleware_makespan(n, mask(n, q), x, k, W - 2, K), 1e-6)
        << trial;
  }
}

TEST(CostModelProperty, MonotoneInPayloadSizeAndAnalysisCount) {
  for (auto preset : {preset_a(), preset_b()}) {
    WorkloadSpec w;
    w.profile = preset;
    w.steps = 10;
    w.qualified_fraction = 0.4;
    for (auto p : kAllPatterns) {
      double prev = 0;
      for (int s : {8, 16, 32, 64, 128}) {
        w.size_bytes = static_cast<std::uint64_t>(s) * kMiB;
        const double t = predict(w, p).makespan_ms;
        EXPECT_GE(t, prev - 1e-9);
        prev = t;
      }
      w.size_bytes = 32 * kMiB;
      prev = 0;
      for (int k = 1; k <= 5; ++k) {
        w.instances = k;
        const double t = predict(w, p).makespan_ms;
        EXPECT_GE(t, prev - 1e-9);
        prev = t;
      }
      w.instances = 1;
    }
  }
}

TEST(CostModelProperty, BoundedByProducerWorkAndSerialWork) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    WorkloadSpec w;
    w.profile = trial % 2 ? preset_a() : preset_b();
    w.steps = 1 + static_cast<int>(rng() % 12);
    w.qualified_fraction = static_cast<double>(rng() % 11) / 10.0;
    w.size_bytes = (8u << (rng() % 5)) * kMiB;
    w.instances = 1 + static_cast<int>(rng() % 3);
    const double g = w.profile.gen.at(w.size_bytes), c = w.profile.check.at(w.size_bytes);
    const double io = w.profile.io.at(w.size_bytes), a = w.profile.analysis.at(w.size_bytes);
    const double sig = w.profile.trigger_latency_ms;
    const double n = w.steps, q = static_cast<double>(w.schedule().count()), k = w.instances;
    const double serial = n * (g + c + io) + q * k * (sig + io + a);
    for (auto p : kAllPatterns) {
      const auto r = predict(w, p);
      EXPECT_GE(r.makespan_ms, n * g - 1e-6);
      EXPECT_GE(r.makespan_ms, q * k * a / std::max(1, w.pool - 2) - 1e-6);
      EXPECT_LE(r.makespan_ms, serial + 1e-6);
      EXPECT_EQ(r.analyses_completed, static_cast<std::uint64_t>(q * k));
    }
  }
}

TEST(CostModel, BytesFollowPatternRules) {
  WorkloadSpec w;
  w.steps = 10;
  w.qualified_fraction = 0.3;
  w.size_bytes = 8 * kMiB;
  w.instances = 2;
  EXPECT_EQ(bytes_predicted(w, TriggerPattern::P), 3 * 8 * kMiB);
  EXPECT_EQ(bytes_predicted(w, TriggerPattern::C), 10 * 8 * kMiB);
  EXPECT_EQ(bytes_predicted(w, TriggerPattern::M), (10 + 3 * 2) * 8 * kMiB);
  EXPECT_EQ(predict(w, TriggerPattern::M).bytes, (10 + 3 * 2) * 8 * kMiB);
}

TEST(CostModel, SlowdownStretchesOversubscribedAnalyses) {
  WorkloadSpec w = [] {
    WorkloadSpec x;
    x.profile = preset_b();
    x.steps = 5;
    x.size_bytes = 8 * kMiB;
    x.qualified_fraction = 1.0;
    x.instances = 7;
    return x;
  }();
  w.oversubscription = OversubscriptionMode::queueing;
  const double queued = predict(w, TriggerPattern::M).makespan_ms;
  w.oversubscription = OversubscriptionMode::proportional_slowdown;
  w.slowdown_penalty = 1.0;
  const double fair = predict(w, TriggerPattern::M).makespan_ms;
  w.slowdown_penalty = 1.25;
  const double penalised = predict(w, TriggerPattern::M).makespan_ms;
  EXPECT_LT(fair, queued);
  EXPECT_GT(penalised, fair);
}

TEST(CostModel, RejectsPoolWithoutAnalysisWorkers) {
  WorkloadSpec w;
  w.pool = 2;
  EXPECT_THROW(predict(w, TriggerPattern::M), ConfigError);
  EXPECT_NO_THROW(predict(w, TriggerPattern::P));
}

TEST(CostModel, EventsAreOrderedAndCoverMakespan) {
  WorkloadSpec w;
  w.steps = 6;
  w.qualified_fraction = 0.5;
  for (auto p : kAllPatterns) {
    const auto r = predict(w, p);
    ASSERT_FALSE(r.events.empty());
    for (std::size_t i = 1; i < r.events.size(); ++i)
      EXPECT_LE(r.events[i - 1].t_start_ms, r.events[i].t_start_ms);
    double last = 0;
    for (const auto& e : r.events) last = std::max(last, e.t_end_ms);
    EXPECT_NEAR(last, r.makespan_ms, 1e-6);
  }
}

TEST(Ranking, SpreadAndLabels) {
  EXPECT_NEAR(relative_spread({100, 104, 102}), 0.04, 1e-12);
  const auto close = rank({{TriggerPattern::P, 100}, {TriggerPattern::C, 104}, {TriggerPattern::M, 102}}, 0.05);
  EXPECT_TRUE(close.similar);
  EXPECT_EQ(close.label(), "similar");
  EXPECT_EQ(close.top(), TriggerPattern::P);
  const auto apart = rank({{TriggerPattern::P, 130}, {TriggerPattern::C, 104}, {TriggerPattern::M, 100}}, 0.05);
  EXPECT_FALSE(apart.similar);
  EXPECT_EQ(apart.label(), "M");
  EXPECT_EQ(apart.order[1].first, TriggerPattern::C);
  EXPECT_THROW(rank({}, 0.05), std::invalid_argument);
}
