#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "triggerbench/triggerbench.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config;
  std::string pattern;
  std::optional<int> steps;
  std::optional<double> size_mb;
  std::optional<double> qualified_pct;
  std::string distribution;
  std::optional<int> instances;
  std::optional<int> pool;
  std::string preset;
  std::string mode = "live";
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::string oversubscription;
  std::optional<double> penalty;
  std::optional<double> sigma;
  unsigned parallel_cells = 1;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON workload file");
  cmd->add_option("--pattern", o.pattern, "p, c, m or all");
  cmd->add_option("--steps", o.steps, "steps per run");
  cmd->add_option("--size-mb", o.size_mb, "payload size per step (MiB)");
  cmd->add_option("--qualified-pct", o.qualified_pct, "percentage of qualified steps");
  cmd->add_option("--distribution", o.distribution, "even or block:<a>-<b>");
  cmd->add_option("--instances", o.instances, "analyses triggered per qualified step");
  cmd->add_option("--pool", o.pool, "worker pool size");
  cmd->add_option("--preset", o.preset, "cost preset a or b");
  cmd->add_option("--mode", o.mode, "live, predict or both");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "payload seed");
  cmd->add_option("--reps", o.reps, "repetitions per cell");
  cmd->add_option("--oversubscription", o.oversubscription, "queueing or slowdown");
  cmd->add_option("--penalty", o.penalty, "extra slowdown factor per excess task");
  cmd->add_option("--sigma", o.sigma, "trigger latency (ms)");
}

tb::WorkloadSpec resolve(const Overrides& o, tb::WorkloadSpec base) {
  if (!o.config.empty()) base = tb::load_workload(o.config, std::move(base));
  if (!o.preset.empty()) base.profile = tb::preset_by_name(o.preset);
  if (!o.pattern.empty()) base.patterns = tb::parse_patterns(o.pattern);
  if (o.steps) base.steps = *o.steps;
  if (o.size_mb) base.size_bytes = static_cast<std::uint64_t>(std::llround(*o.size_mb * tb::kMiB));
  if (o.qualified_pct) base.qualified_fraction = *o.qualified_pct / 100.0;
  if (!o.distribution.empty()) base.distribution = o.distribution;
  if (o.instances) base.instances = *o.instances;
  if (o.pool) base.pool = *o.pool;
  if (o.seed) base.seed = *o.seed;
  if (o.reps) base.reps = *o.reps;
  if (!o.oversubscription.empty()) base.oversubscription = tb::parse_oversubscription(o.oversubscription);
  if (o.penalty) base.slowdown_penalty = *o.penalty;
  if (o.sigma) base.profile.trigger_latency_ms = *o.sigma;
  base.validate();
  return base;
}

void say(const std::string& s) { std::cerr << s << '\n'; }

std::ofstream open_file(const fs::path& p) { return tb::open_out(p); }

int cmd_run(const Overrides& o) {
  const auto w = resolve(o, {});
  const auto mode = tb::parse_run_mode(o.mode);
  std::vector<tb::SweepRow> rows;
  auto events = open_file(fs::path(o.out) / "events.csv");
  events << tb::kEventCsvHeader << '\n';
  for (auto p : w.patterns) {
    if (mode != tb::RunMode::live) {
      const auto r = tb::predict(w, p);
      tb::write_events_csv(events, r.run_id, tb::to_string(p), r.events, false);
      std::printf("%s predicted makespan %.1f ms, bytes %llu, analyses %llu\n", std::string(tb::to_string(p)).c_str(),
                  r.makespan_ms, static_cast<unsigned long long>(r.bytes),
                  static_cast<unsigned long long>(r.analyses_completed));
    }
    if (mode == tb::RunMode::predict) continue;
    for (int rep = 0; rep < w.reps; ++rep) {
      const auto r = tb::run_pattern(w, p, rep);
      tb::write_events_csv(events, r.run_id, tb::to_string(p), r.events, false);
      rows.push_back(tb::detail::make_row(w, p, rep, r.makespan_ms, r.bytes_transferred, r.analyses_completed));
      const auto st = r.stages;
      auto f = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("-"); };
      std::printf("%s rep %d makespan %.1f ms, bytes %llu, analyses %llu (gen %s, check %s, io %s, analysis %s)\n",
                  std::string(tb::to_string(p)).c_str(), rep, r.makespan_ms,
                  static_cast<unsigned long long>(r.bytes_transferred),
                  static_cast<unsigned long long>(r.analyses_completed), f(st.generation).c_str(),
                  f(st.checking).c_str(), f(st.io).c_str(), f(st.analysis).c_str());
    }
  }
  if (!rows.empty()) {
    auto out = open_file(fs::path(o.out) / "run.csv");
    tb::write_sweep_csv(out, rows);
  }
  return 0;
}

int cmd_sweep(const Overrides& o, bool predict_only) {
  tb::GridSpec g;
  g.base = resolve(o, {});
  g.mode = predict_only ? tb::RunMode::predict : tb::parse_run_mode(o.mode);
  g.parallel_cells = o.parallel_cells;
  if (g.mode != tb::RunMode::predict && o.parallel_cells > 1)
    throw tb::ConfigError("--parallel-cells is only allowed in predict mode");
  const auto res = tb::run_sweep(g, say);
  const fs::path dir(o.out);
  {
    auto out = open_file(dir / "sweep.csv");
    tb::write_sweep_csv(out, res.rows);
  }
  tb::emit_report(res.grid, tb::ReportFormat::csv, dir / "grid.csv");
  tb::emit_report(res.grid, tb::ReportFormat::svg_heatmap, dir / "heatmap.svg", "setting " + res.preset);
  tb::emit_report(res.grid, tb::ReportFormat::text_table, dir / "grid.txt");
  if (res.predicted) {
    tb::emit_report(*res.predicted, tb::ReportFormat::csv, dir / "grid_predicted.csv");
    auto out = open_file(dir / "sweep_predicted.csv");
    tb::write_sweep_csv(out, res.predicted_rows);
  }
  std::ifstream txt(dir / "grid.txt");
  std::cout << txt.rdbuf();
  return 0;
}

int cmd_series(const Overrides& o, bool analytics, const std::vector<int>& ks) {
  const auto mode = tb::parse_run_mode(o.mode);
  const auto base = resolve(o, analytics ? tb::analytics_count_base() : tb::distribution_base());
  std::vector<tb::SweepRow> rows;
  const auto pts = analytics ? tb::run_analytics_count_experiment(base, ks, mode, &rows, say)
                             : tb::run_distribution_experiment(base, tb::default_blocks(), mode, &rows, say);
  const fs::path dir(o.out);
  {
    auto out = open_file(dir / (analytics ? "analytics_count.csv" : "distribution.csv"));
    tb::write_series_csv(out, pts);
  }
  if (!rows.empty()) {
    auto out = open_file(dir / (analytics ? "analytics_count_runs.csv" : "distribution_runs.csv"));
    tb::write_sweep_csv(out, rows);
  }
  tb::write_series_csv(std::cout, pts);
  return 0;
}

int cmd_report(const Overrides& o, const std::string& in, const std::string& format) {
  const fs::path dir(o.out);
  if (!in.empty()) {
    std::ifstream is(in);
    if (!is) throw tb::IoError("cannot open grid", in);
    const auto grid = tb::read_grid_csv(is);
    const auto f = tb::parse_report_format(format);
    const char* ext = f == tb::ReportFormat::csv ? "grid.csv" : f == tb::ReportFormat::svg_heatmap ? "heatmap.svg" : "grid.txt";
    tb::emit_report(grid, f, dir / ext, fs::path(in).stem().string());
    std::cout << "wrote " << (dir / ext).string() << '\n';
    return 0;
  }
  tb::WorkloadSpec a = resolve(o, {});
  tb::WorkloadSpec b = a;
  a.profile = tb::preset_a();
  b.profile = tb::preset_b();
  const auto rows = tb::recommendation_table(a, b);
  tb::emit_report(rows, dir / "recommendations.txt");
  tb::write_recommendation_table(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark for data-driven task trigger patterns"};
  app.require_subcommand(1);
  Overrides o;
  std::vector<int> ks{1, 2, 3, 4, 5, 6, 7};
  std::string in, format = "svg-heatmap";

  auto* run = app.add_subcommand("run", "run one workload for each selected pattern");
  auto* sweep = app.add_subcommand("sweep", "sweep qualified % x size per step");
  auto* ac = app.add_subcommand("analytics-count", "vary the number of analyses per qualified step");
  auto* dist = app.add_subcommand("distribution", "move a block of qualified steps through the run");
  auto* pred = app.add_subcommand("predict", "sweep with the discrete-event model only");
  auto* rep = app.add_subcommand("report", "render a grid CSV, or print the recommendation table");
  for (auto* c : {run, sweep, ac, dist, pred, rep}) add_common(c, o);
  pred->add_option("--parallel-cells", o.parallel_cells, "cells predicted concurrently");
  sweep->add_option("--parallel-cells", o.parallel_cells, "cells predicted concurrently (predict mode)");
  ac->add_option("--k-values", ks, "analysis counts")->delimiter(',');
  rep->add_option("--in", in, "grid CSV to render");
  rep->add_option("--format", format, "csv, svg-heatmap or text-table");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o, false);
    if (*pred) return cmd_sweep(o, true);
    if (*ac) return cmd_series(o, true, ks);
    if (*dist) return cmd_series(o, false, ks);
    if (*rep) return cmd_report(o, in, format);
  } catch (const tb::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
