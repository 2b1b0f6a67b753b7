// End-to-end checks. Each test prints one "criterion N: PASS|FAIL" line.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "triggerbench/triggerbench.hpp"

using namespace tb;
namespace fs = std::filesystem;
using P = TriggerPattern;

namespace {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(Clock::now() - t0_).count(); }

 private:
  Clock::time_point t0_ = Clock::now();
};

bool verdict(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return ok;
}

void progress(const std::string& s) { std::fprintf(stderr, "  %s\n", s.c_str()); }

double mean_live(const WorkloadSpec& w, P p) {
  double sum = 0;
  for (int r = 0; r < w.reps; ++r) sum += run_pattern(w, p, r).makespan_ms;
  return sum / w.reps;
}

std::map<P, double> live_means(const WorkloadSpec& w) {
  std::map<P, double> m;
  for (auto p : kAllPatterns) m[p] = mean_live(w, p);
  std::ostringstream os;
  os << "q=" << w.qualified_fraction * 100 << "% S=" << w.size_mib() << "MiB k=" << w.instances;
  for (auto& [p, v] : m) os << ' ' << to_string(p) << '=' << std::lround(v);
  progress(os.str());
  return m;
}

// (runner-up - best) / best, and the winner.
std::pair<P, double> lead(const std::map<P, double>& m) {
  std::vector<std::pair<P, double>> v(m.begin(), m.end());
  std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.second < b.second; });
  return {v[0].first, (v[1].second - v[0].second) / v[0].second};
}

std::string fmt(const char* f, double x) {
  char b[64];
  std::snprintf(b, sizeof b, f, x);
  return b;
}

WorkloadSpec with(CostProfile prof, double q, double s_mib, int reps = 3) {
  WorkloadSpec w;
  w.profile = std::move(prof);
  w.qualified_fraction = q;
  w.size_bytes = static_cast<std::uint64_t>(s_mib * kMiB);
  w.reps = reps;
  return w;
}

}  // namespace

TEST(Acceptance, C1_ByteAccounting) {
  Stopwatch sw;
  WorkloadSpec w = with(preset_a(), 0.2, 32);
  const auto p = predict(w, P::P).bytes, c = predict(w, P::C).bytes, m = predict(w, P::M).bytes;
  const bool ok = p == 64 * kMiB && c == 320 * kMiB && m == 384 * kMiB && sw.seconds() < 1.0;
  EXPECT_TRUE(verdict(1, ok,
                      "P=" + std::to_string(p / kMiB) + " C=" + std::to_string(c / kMiB) + " M=" +
                          std::to_string(m / kMiB) + " MiB in " + fmt("%.3f s", sw.seconds())));
}

TEST(Acceptance, C2_GenerationBoundFavoursProducer) {
  Stopwatch sw;
  bool ok = true;
  std::string detail;
  for (double q : {0.0, 0.2}) {
    const auto m = live_means(with(preset_a(), q, 128));
    const auto [best, margin] = lead(m);
    ok &= best == P::P && margin > 0.05;
    detail += fmt("q=%g%%:", q * 100) + std::string(to_string(best)) + fmt("+%.1f%% ", margin * 100);
  }
  for (double q : {0.8, 1.0}) {
    const auto m = live_means(with(preset_a(), q, 128));
    ok &= m.at(P::C) < m.at(P::P);
    detail += fmt("q=%g%%:C/P=", q * 100) + fmt("%.3f ", m.at(P::C) / m.at(P::P));
  }
  ok &= sw.seconds() <= 300;
  EXPECT_TRUE(verdict(2, ok, detail + fmt("in %.0f s", sw.seconds())));
}

TEST(Acceptance, C3_AnalysisBoundFavoursMiddleware) {
  Stopwatch sw;
  bool ok = true;
  std::string detail;
  for (double q : {0.8, 1.0})
    for (double s : {8.0, 16.0, 32.0}) {
      auto w = with(preset_b(), q, s, 2);
      ok &= w.pool >= w.instances + 2;
      const auto [best, margin] = lead(live_means(w));
      ok &= best == P::M && margin > 0.05;
      detail += fmt("(%g%%,", q * 100) + fmt("%g)", s) + std::string(to_string(best)) + fmt("+%.1f%% ", margin * 100);
    }
  ok &= sw.seconds() <= 300;
  EXPECT_TRUE(verdict(3, ok, detail + fmt("in %.0f s", sw.seconds())));
}

TEST(Acceptance, C4_MiddlewareLosesAtLargeSize) {
  Stopwatch sw;
  GridSpec g;
  g.base = with(preset_b(), 0.6, 32);
  g.qualified_pcts = {60};
  g.mode = RunMode::live;
  const auto res = run_sweep(g, progress);
  const auto path = fs::temp_directory_path() / "tb_acceptance" / "size_series.csv";
  emit_report(res.grid, ReportFormat::csv, path);
  std::ifstream in(path);
  const auto grid = read_grid_csv(in);
  std::string labels;
  for (const auto& c : grid.cells) labels += c.label + " ";
  const auto* small = grid.find(60, 8 * kMiB);
  const auto* large = grid.find(60, 128 * kMiB);
  const bool ok = small && large && small->label == "M" && large->label.find('M') == std::string::npos &&
                  sw.seconds() <= 600;
  EXPECT_TRUE(verdict(4, ok, "labels 8..128 MiB: " + labels + fmt("in %.0f s", sw.seconds())));
}

TEST(Acceptance, C5_OversubscriptionHurtsMiddleware) {
  Stopwatch sw;
  bool ok = true;
  std::string detail;
  auto base = analytics_count_base();
  base.reps = 1;
  const int W = base.pool;
  for (int k : {2, 3, W + 2}) {
    auto w = base;
    w.instances = k;
    const auto m = live_means(w);
    const bool m_min = m.at(P::M) < std::min(m.at(P::P), m.at(P::C));
    const bool m_max = m.at(P::M) > std::max(m.at(P::P), m.at(P::C));
    ok &= k <= 3 ? m_min : m_max;
    detail += "k=" + std::to_string(k) + (m_min ? ":M-min " : m_max ? ":M-max " : ":M-mid ");
  }
  ok &= sw.seconds() <= 300;
  EXPECT_TRUE(verdict(5, ok, detail + fmt("in %.0f s", sw.seconds())));
}

TEST(Acceptance, C6_LateQualifiedDataFavoursProducer) {
  Stopwatch sw;
  auto base = distribution_base();
  base.reps = 2;
  std::vector<SweepRow> rows;
  const auto pts = run_distribution_experiment(base, {{1, 5}, {21, 25}}, RunMode::live, &rows, progress);
  std::vector<double> early;
  for (auto& [p, v] : pts[0].mean_ms) early.push_back(v);
  const double spread = relative_spread(early);
  const auto [best, margin] = lead(pts[1].mean_ms);
  const bool ok = spread < base.similarity_epsilon && best == P::P && margin > 0 && sw.seconds() <= 300;
  EXPECT_TRUE(verdict(6, ok,
                      fmt("block 1-5 spread %.1f%%, ", spread * 100) + "block 21-25 " + std::string(to_string(best)) +
                          fmt(" ahead by %.1f%% ", margin * 100) + fmt("in %.0f s", sw.seconds())));
}

TEST(Acceptance, C7_QuadrantRecommendations) {
  Stopwatch sw;
  WorkloadSpec a, b;
  a.profile = preset_a();
  b.profile = preset_b();
  const auto rows = recommendation_table(a, b);
  const std::vector<std::string> want_a{"P", "P", "similar", "C"}, want_b{"similar", "P", "M", "M"};
  bool ok = rows.size() >= 4;
  std::string got;
  for (std::size_t i = 0; i < 4 && i < rows.size(); ++i) {
    ok &= rows[i].choice_a == want_a[i] && rows[i].choice_b == want_b[i];
    got += rows[i].setting + " A=" + rows[i].choice_a + " B=" + rows[i].choice_b + "; ";
  }
  ok &= sw.seconds() < 1.0;
  EXPECT_TRUE(verdict(7, ok, got + fmt("in %.3f s", sw.seconds())));
}

TEST(Acceptance, C8_ModelTracksLiveSweep) {
  Stopwatch sw;
  std::size_t within = 0, total = 0;
  double worst = 0;
  for (auto prof : {preset_a(), preset_b()}) {
    GridSpec g;
    g.base.profile = prof;
    g.base.reps = 1;
    g.mode = RunMode::both;
    const auto res = run_sweep(g, progress);
    for (const auto& cell : res.grid.cells) {
      const auto* pred = res.predicted->find(cell.qualified_pct, cell.size_bytes);
      for (auto& [p, measured] : cell.mean_ms) {
        const double err = std::abs(pred->mean_ms.at(p) - measured) / measured;
        worst = std::max(worst, err);
        within += err <= 0.15;
        ++total;
      }
    }
  }
  const double share = total ? static_cast<double>(within) / static_cast<double>(total) : 0.0;
  EXPECT_TRUE(verdict(8, share >= 0.9,
                      std::to_string(within) + "/" + std::to_string(total) + fmt(" runs within 15%% (worst %.1f%%) ", worst * 100) +
                          fmt("in %.0f s", sw.seconds())));
}

TEST(Acceptance, C9_GrayScottPeakMoves) {
  Stopwatch sw;
  GrayScott sim({64, 64, 64}, GrayScottParams{}, 1);
  sim.step(25);
  const double early = peak_position(build_histogram(sim.u()));
  sim.step(975);
  const double late = peak_position(build_histogram(sim.u()));
  const bool ok = early >= 0.9 && late < 0.5 && sim.steps_taken() >= 1000 && sw.seconds() <= 120;
  EXPECT_TRUE(verdict(9, ok, fmt("peak at step 25 = %.3f, ", early) + fmt("at step 1000 = %.3f ", late) +
                                 fmt("in %.1f s", sw.seconds())));
}

#ifdef TB_SUITE_COMMAND
TEST(Acceptance, C10_InvariantSuites) {
  Stopwatch sw;
  const int rc = std::system(TB_SUITE_COMMAND " > /dev/null 2>&1");
  const bool ok = rc == 0 && sw.seconds() <= 180;
  EXPECT_TRUE(verdict(10, ok, "suites exit " + std::to_string(rc) + fmt(" in %.1f s", sw.seconds())));
}
#endif
