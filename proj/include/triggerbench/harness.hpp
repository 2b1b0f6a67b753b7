#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "triggerbench/costmodel.hpp"
#include "triggerbench/error.hpp"
#include "triggerbench/orchestrator.hpp"
#include "triggerbench/workload.hpp"

namespace tb {

enum class RunMode { live, predict, both };

inline RunMode parse_run_mode(std::string_view s) {
  if (s == "live") return RunMode::live;
  if (s == "predict") return RunMode::predict;
  if (s == "both") return RunMode::both;
  throw ConfigError("unknown mode '" + std::string(s) + "' (want live, predict or both)");
}

/// Population standard deviation.
inline double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

/// Fastest pattern; patterns within `epsilon` of it share the label
/// ("P/C"), and a tie among every pattern (three or more) reads "similar".
inline std::string cell_label(const std::map<TriggerPattern, double>& means, double epsilon) {
  if (means.empty()) return "";
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [p, m] : means) best = std::min(best, m);
  std::string label;
  std::size_t n = 0;
  for (const auto& [p, m] : means) {
    if (m == best || m - best < epsilon * best) {
      if (n++) label += '/';
      label += to_string(p);
    }
  }
  if (n >= 3 && n == means.size()) return "similar";
  return label;
}

struct GridCell {
  double qualified_pct = 0.0;
  std::uint64_t size_bytes = 0;
  std::map<TriggerPattern, double> mean_ms;
  double std_ms = 0.0;
  double gray = 0.0;
  std::string label;
  std::string diagnostic;  // set when a run of this cell failed

  bool operator==(const GridCell& o) const {
    return qualified_pct == o.qualified_pct && size_bytes == o.size_bytes && mean_ms == o.mean_ms &&
           std_ms == o.std_ms && gray == o.gray && label == o.label;
  }
};

struct SweepGrid {
  std::vector<GridCell> cells;  // q-major, then size

  bool operator==(const SweepGrid& o) const { return cells == o.cells; }

  const GridCell* find(double q_pct, std::uint64_t size) const {
    for (const auto& c : cells)
      if (std::abs(c.qualified_pct - q_pct) < 1e-9 && c.size_bytes == size) return &c;
    return nullptr;
  }
};

/// Fills std, label and the min-max normalised gray value of every cell.
inline void finalize_grid(SweepGrid& g, double epsilon) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto& c : g.cells) {
    std::vector<double> v;
    for (const auto& [p, m] : c.mean_ms) v.push_back(m);
    c.std_ms = population_std(v);
    c.label = cell_label(c.mean_ms, epsilon);
    lo = std::min(lo, c.std_ms);
    hi = std::max(hi, c.std_ms);
  }
  for (auto& c : g.cells) c.gray = hi > lo ? (c.std_ms - lo) / (hi - lo) : 0.0;
}

struct SweepRow {
  std::string preset;
  TriggerPattern pattern = TriggerPattern::P;
  double qualified_pct = 0.0;
  std::uint64_t size_bytes = 0;
  int steps = 0;
  int instances = 1;
  int pool = 0;
  int rep = 0;
  double makespan_ms = 0.0;
  std::uint64_t bytes_transferred = 0;
  std::uint64_t analyses_completed = 0;
};

struct GridSpec {
  WorkloadSpec base;
  std::vector<double> qualified_pcts{0, 20, 40, 60, 80, 100};
  std::vector<double> sizes_mib{8, 16, 32, 64, 128};
  RunMode mode = RunMode::live;
  unsigned parallel_cells = 1;  // honoured only in predict mode
};

struct SweepResult {
  std::string preset;
  SweepGrid grid;                      // live measurements (or predictions in predict mode)
  std::optional<SweepGrid> predicted;  // filled in "both" mode
  std::vector<SweepRow> rows;          // measured rows
  std::vector<SweepRow> predicted_rows;
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

inline WorkloadSpec cell_workload(const GridSpec& spec, double q_pct, double size_mib) {
  WorkloadSpec w = spec.base;
  w.qualified_fraction = q_pct / 100.0;
  w.size_bytes = static_cast<std::uint64_t>(std::llround(size_mib * static_cast<double>(kMiB)));
  return w;
}

inline SweepRow make_row(const WorkloadSpec& w, TriggerPattern p, int rep, double ms, std::uint64_t bytes,
                         std::uint64_t analyses) {
  return {w.profile.name, p, w.qualified_fraction * 100.0, w.size_bytes, w.steps, w.instances,
          effective_pool(w.pool), rep, ms, bytes, analyses};
}

}  // namespace detail

inline SweepResult run_sweep(const GridSpec& spec, const ProgressFn& progress = {}) {
  if (spec.qualified_pcts.empty() || spec.sizes_mib.empty()) throw ConfigError("sweep grid has an empty axis");
  spec.base.validate();
  SweepResult out;
  out.preset = spec.base.profile.name;
  const bool live = spec.mode != RunMode::predict;
  const bool pred = spec.mode != RunMode::live;

  std::vector<std::pair<double, double>> axes;
  for (double q : spec.qualified_pcts)
    for (double s : spec.sizes_mib) axes.emplace_back(q, s);

  SweepGrid predicted;
  if (pred) {
    predicted.cells.resize(axes.size());
    std::vector<std::vector<SweepRow>> rows(axes.size());
    auto work = [&](std::size_t idx) {
      const auto w = detail::cell_workload(spec, axes[idx].first, axes[idx].second);
      GridCell& c = predicted.cells[idx];
      c.qualified_pct = axes[idx].first;
      c.size_bytes = w.size_bytes;
      try {
        w.validate();
        for (auto p : w.patterns) {
          const auto r = predict(w, p);
          c.mean_ms[p] = r.makespan_ms;
          rows[idx].push_back(detail::make_row(w, p, 0, r.makespan_ms, r.bytes, r.analyses_completed));
        }
      } catch (const std::exception& e) {
        c.diagnostic = e.what();
        c.mean_ms.clear();
      }
    };
    const unsigned par = spec.mode == RunMode::predict ? std::max(1u, spec.parallel_cells) : 1u;
    if (par <= 1) {
      for (std::size_t i = 0; i < axes.size(); ++i) work(i);
    } else {
      std::vector<std::thread> ts;
      std::atomic<std::size_t> next{0};
      for (unsigned t = 0; t < par; ++t)
        ts.emplace_back([&] {
          for (std::size_t i; (i = next.fetch_add(1)) < axes.size();) work(i);
        });
      for (auto& t : ts) t.join();
    }
    for (auto& r : rows) out.predicted_rows.insert(out.predicted_rows.end(), r.begin(), r.end());
    finalize_grid(predicted, spec.base.similarity_epsilon);
  }

  if (live) {
    for (const auto& [q, s] : axes) {
      const auto w = detail::cell_workload(spec, q, s);
      GridCell c;
      c.qualified_pct = q;
      c.size_bytes = w.size_bytes;
      try {
        w.validate();
        for (auto p : w.patterns) {
          double sum = 0;
          for (int rep = 0; rep < w.reps; ++rep) {
            const auto r = run_pattern(w, p, rep);
            sum += r.makespan_ms;
            out.rows.push_back(detail::make_row(w, p, rep, r.makespan_ms, r.bytes_transferred, r.analyses_completed));
          }
          c.mean_ms[p] = sum / w.reps;
        }
      } catch (const std::exception& e) {
        c.diagnostic = e.what();
        c.mean_ms.clear();
      }
      if (progress) {
        std::ostringstream os;
        os << "cell q=" << q << "% S=" << s << "MiB";
        for (const auto& [p, m] : c.mean_ms) os << ' ' << to_string(p) << '=' << std::lround(m) << "ms";
        if (!c.diagnostic.empty()) os << " failed: " << c.diagnostic;
        progress(os.str());
      }
      out.grid.cells.push_back(std::move(c));
    }
    finalize_grid(out.grid, spec.base.similarity_epsilon);
    if (pred) out.predicted = std::move(predicted);
  } else {
    out.grid = std::move(predicted);
    out.rows = out.predicted_rows;
  }
  return out;
}

/// One bar group: mean makespan per pattern for a single setting.
struct SeriesPoint {
  std::string setting;
  std::map<TriggerPattern, double> mean_ms;
  std::map<TriggerPattern, double> predicted_ms;
};

namespace detail {

inline SeriesPoint measure_point(const WorkloadSpec& w, std::string setting, RunMode mode,
                                 std::vector<SweepRow>* rows) {
  w.validate();
  SeriesPoint pt;
  pt.setting = std::move(setting);
  for (auto p : w.patterns) {
    if (mode != RunMode::live) pt.predicted_ms[p] = predict(w, p).makespan_ms;
    if (mode == RunMode::predict) continue;
    double sum = 0;
    for (int rep = 0; rep < w.reps; ++rep) {
      const auto r = run_pattern(w, p, rep);
      sum += r.makespan_ms;
      if (rows) rows->push_back(make_row(w, p, rep, r.makespan_ms, r.bytes_transferred, r.analyses_completed));
    }
    pt.mean_ms[p] = sum / w.reps;
  }
  if (mode == RunMode::predict) pt.mean_ms = pt.predicted_ms;
  return pt;
}

}  // namespace detail

// Analytics-count experiment defaults: 100% qualified, proportional slowdown.
inline WorkloadSpec analytics_count_base() {
  WorkloadSpec w;
  w.profile = preset_b();
  w.steps = 5;
  w.size_bytes = 8 * kMiB;
  w.qualified_fraction = 1.0;
  w.oversubscription = OversubscriptionMode::proportional_slowdown;
  w.slowdown_penalty = 1.25;
  return w;
}

inline std::vector<SeriesPoint> run_analytics_count_experiment(const WorkloadSpec& base, const std::vector<int>& k_values,
                                                               RunMode mode = RunMode::live,
                                                               std::vector<SweepRow>* rows = nullptr,
                                                               const ProgressFn& progress = {}) {
  if (k_values.empty()) throw ConfigError("no analytics counts given");
  std::vector<SeriesPoint> out;
  for (int k : k_values) {
    WorkloadSpec w = base;
    w.instances = k;
    out.push_back(detail::measure_point(w, "k=" + std::to_string(k), mode, rows));
    if (progress) progress("analytics k=" + std::to_string(k) + " done");
  }
  return out;
}

// Distribution experiment defaults: 25 steps, one block of five qualified steps.
inline WorkloadSpec distribution_base() {
  WorkloadSpec w;
  w.profile = preset_b();
  w.steps = 25;
  w.size_bytes = 64 * kMiB;
  w.qualified_fraction = 0.2;
  return w;
}

inline std::vector<std::pair<int, int>> default_blocks() { return {{1, 5}, {6, 10}, {11, 15}, {16, 20}, {21, 25}}; }

inline std::vector<SeriesPoint> run_distribution_experiment(const WorkloadSpec& base,
                                                            const std::vector<std::pair<int, int>>& blocks,
                                                            RunMode mode = RunMode::live,
                                                            std::vector<SweepRow>* rows = nullptr,
                                                            const ProgressFn& progress = {}) {
  if (blocks.empty()) throw ConfigError("no blocks given");
  std::vector<SeriesPoint> out;
  for (const auto& [a, b] : blocks) {
    WorkloadSpec w = base;
    w.distribution = "block:" + std::to_string(a) + "-" + std::to_string(b);
    w.qualified_fraction = static_cast<double>(b - a + 1) / w.steps;
    out.push_back(detail::measure_point(w, std::to_string(a) + "-" + std::to_string(b), mode, rows));
    if (progress) progress("block " + out.back().setting + " done");
  }
  return out;
}

/// One row of the summary table: a factor setting and the preferred pattern per preset.
struct RecommendationRow {
  std::string factor;
  std::string setting;
  std::string choice_a;
  std::string choice_b;
};

struct QuadrantSplit {
  double q_split_pct = 50.0;       // q <= split is "low"
  double size_split_mib = 32.0;    // S <= split is "small"
};

// Sums predicted makespans over the cells of a quadrant, then ranks.
inline std::string quadrant_choice(const WorkloadSpec& base, const std::vector<double>& qs,
                                   const std::vector<double>& sizes) {
  std::map<TriggerPattern, double> total;
  for (double q : qs)
    for (double s : sizes) {
      WorkloadSpec w = base;
      w.qualified_fraction = q / 100.0;
      w.size_bytes = static_cast<std::uint64_t>(std::llround(s * static_cast<double>(kMiB)));
      for (auto p : kAllPatterns) total[p] += predict(w, p).makespan_ms;
    }
  std::vector<std::pair<TriggerPattern, double>> v(total.begin(), total.end());
  return rank(v, base.similarity_epsilon).label();
}

inline std::vector<RecommendationRow> recommendation_table(const WorkloadSpec& base_a, const WorkloadSpec& base_b,
                                                           const GridSpec& grid = {}, QuadrantSplit split = {}) {
  std::vector<RecommendationRow> rows;
  std::vector<double> q_lo, q_hi, s_lo, s_hi;
  for (double q : grid.qualified_pcts) (q <= split.q_split_pct ? q_lo : q_hi).push_back(q);
  for (double s : grid.sizes_mib) (s <= split.size_split_mib ? s_lo : s_hi).push_back(s);
  char qs[32], ss[32];
  std::snprintf(qs, sizeof qs, "%g%%", split.q_split_pct);
  std::snprintf(ss, sizeof ss, "%gMiB", split.size_split_mib);
  const std::string factor = "qualified %, size per step";
  for (int hi_q = 0; hi_q < 2; ++hi_q)
    for (int hi_s = 0; hi_s < 2; ++hi_s) {
      const auto& Q = hi_q ? q_hi : q_lo;
      const auto& S = hi_s ? s_hi : s_lo;
      if (Q.empty() || S.empty()) continue;
      const std::string setting =
          std::string("(") + (hi_q ? ">" : "<=") + qs + ", " + (hi_s ? ">" : "<=") + ss + ")";
      rows.push_back({factor, setting, quadrant_choice(base_a, Q, S), quadrant_choice(base_b, Q, S)});
    }

  for (int k : {2, 7}) {
    std::string choice[2];
    const WorkloadSpec* bases[2] = {&base_a, &base_b};
    for (int i = 0; i < 2; ++i) {
      WorkloadSpec w = analytics_count_base();
      w.profile = bases[i]->profile;
      w.instances = k;
      choice[i] = recommend(w).label();
    }
    rows.push_back({"analysis tasks", std::to_string(k), choice[0], choice[1]});
  }
  for (auto [a, b] : std::vector<std::pair<int, int>>{{6, 10}, {21, 25}}) {
    std::string choice[2];
    const WorkloadSpec* bases[2] = {&base_a, &base_b};
    for (int i = 0; i < 2; ++i) {
      WorkloadSpec w = distribution_base();
      w.profile = bases[i]->profile;
      w.distribution = "block:" + std::to_string(a) + "-" + std::to_string(b);
      choice[i] = recommend(w).label();
    }
    rows.push_back({"qualified data distribution", std::to_string(a) + "-" + std::to_string(b), choice[0], choice[1]});
  }
  return rows;
}

// ---- serialisation -------------------------------------------------------

inline constexpr std::string_view kSweepCsvHeader =
    "preset,pattern,qualified_pct,size_bytes,steps,instances,pool,rep,makespan_ms,bytes_transferred,"
    "analyses_completed";
inline constexpr std::string_view kGridCsvHeader =
    "qualified_pct,size_bytes,std_ms,gray,label,mean_p_ms,mean_c_ms,mean_m_ms";

inline std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows)
    os << r.preset << ',' << to_string(r.pattern) << ',' << fmt_exact(r.qualified_pct) << ',' << r.size_bytes << ','
       << r.steps << ',' << r.instances << ',' << r.pool << ',' << r.rep << ',' << fmt_exact(r.makespan_ms) << ','
       << r.bytes_transferred << ',' << r.analyses_completed << '\n';
}

inline void write_grid_csv(std::ostream& os, const SweepGrid& g) {
  os << kGridCsvHeader << '\n';
  for (const auto& c : g.cells) {
    os << fmt_exact(c.qualified_pct) << ',' << c.size_bytes << ',' << fmt_exact(c.std_ms) << ',' << fmt_exact(c.gray)
       << ',' << c.label;
    for (auto p : kAllPatterns) {
      os << ',';
      if (auto it = c.mean_ms.find(p); it != c.mean_ms.end()) os << fmt_exact(it->second);
    }
    os << '\n';
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline SweepGrid read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind(std::string(kGridCsvHeader), 0) != 0)
    throw std::invalid_argument("grid CSV header mismatch");
  SweepGrid g;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw std::invalid_argument("grid CSV row has " + std::to_string(f.size()) + " fields");
    GridCell c;
    c.qualified_pct = std::stod(f[0]);
    c.size_bytes = std::stoull(f[1]);
    c.std_ms = std::stod(f[2]);
    c.gray = std::stod(f[3]);
    c.label = f[4];
    for (int i = 0; i < 3; ++i)
      if (!f[5 + i].empty()) c.mean_ms[kAllPatterns[i]] = std::stod(f[5 + i]);
    g.cells.push_back(std::move(c));
  }
  return g;
}

namespace detail {

inline std::vector<double> distinct_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace detail

// Grayscale heatmap: x = qualified %, y = size (largest on top), text = label.
inline void write_svg_heatmap(std::ostream& os, const SweepGrid& g, const std::string& title) {
  std::vector<double> qs, ss;
  for (const auto& c : g.cells) {
    qs.push_back(c.qualified_pct);
    ss.push_back(static_cast<double>(c.size_bytes));
  }
  qs = detail::distinct_sorted(qs);
  ss = detail::distinct_sorted(ss);
  const int cw = 80, ch = 50, left = 90, top = 40;
  const int width = left + cw * static_cast<int>(qs.size()) + 20;
  const int height = top + ch * static_cast<int>(ss.size()) + 60;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  os << "<text x=\"" << left << "\" y=\"22\" font-size=\"15\">" << title << "</text>\n";
  char buf[256];
  for (const auto& c : g.cells) {
    const auto xi = std::lower_bound(qs.begin(), qs.end(), c.qualified_pct) - qs.begin();
    const auto yi = std::lower_bound(ss.begin(), ss.end(), static_cast<double>(c.size_bytes)) - ss.begin();
    const int x = left + cw * static_cast<int>(xi);
    const int y = top + ch * (static_cast<int>(ss.size()) - 1 - static_cast<int>(yi));
    const int v = static_cast<int>(std::lround(c.gray * 255.0));
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"rgb(%d,%d,%d)\" stroke=\"#888\"/>\n", x, y,
                  cw, ch, v, v, v);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" fill=\"%s\">%s</text>\n", x + cw / 2,
                  y + ch / 2 + 5, v < 128 ? "white" : "black", c.label.c_str());
    os << buf;
  }
  for (std::size_t i = 0; i < qs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%g%%</text>\n",
                  left + cw * static_cast<int>(i) + cw / 2, top + ch * static_cast<int>(ss.size()) + 20, qs[i]);
    os << buf;
  }
  for (std::size_t i = 0; i < ss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%g MiB</text>\n", left - 8,
                  top + ch * (static_cast<int>(ss.size()) - 1 - static_cast<int>(i)) + ch / 2 + 5,
                  ss[i] / static_cast<double>(kMiB));
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">qualified data</text>\n",
                left + cw * static_cast<int>(qs.size()) / 2, top + ch * static_cast<int>(ss.size()) + 45);
  os << buf << "</svg>\n";
}

inline void write_recommendation_table(std::ostream& os, const std::vector<RecommendationRow>& rows) {
  std::size_t wf = 6, ws = 7;
  for (const auto& r : rows) {
    wf = std::max(wf, r.factor.size());
    ws = std::max(ws, r.setting.size());
  }
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  os << pad("factor", wf) << " | " << pad("setting", ws) << " | setting A | setting B\n";
  os << std::string(wf, '-') << "-+-" << std::string(ws, '-') << "-+-----------+----------\n";
  for (const auto& r : rows)
    os << pad(r.factor, wf) << " | " << pad(r.setting, ws) << " | " << pad(r.choice_a, 9) << " | " << r.choice_b << '\n';
}

inline void write_series_csv(std::ostream& os, const std::vector<SeriesPoint>& pts) {
  os << "setting,pattern,mean_ms,predicted_ms\n";
  for (const auto& pt : pts)
    for (auto p : kAllPatterns) {
      const auto m = pt.mean_ms.find(p);
      const auto q = pt.predicted_ms.find(p);
      if (m == pt.mean_ms.end() && q == pt.predicted_ms.end()) continue;
      os << pt.setting << ',' << to_string(p) << ',' << (m != pt.mean_ms.end() ? fmt_exact(m->second) : "") << ','
         << (q != pt.predicted_ms.end() ? fmt_exact(q->second) : "") << '\n';
    }
}

enum class ReportFormat { csv, svg_heatmap, text_table };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "svg-heatmap" || s == "svg") return ReportFormat::svg_heatmap;
  if (s == "text-table" || s == "text") return ReportFormat::text_table;
  throw ConfigError("unknown report format '" + std::string(s) + "'");
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report", path.string());
  return out;
}

/// Writes `grid` as CSV or heatmap, or the grid as a text table, to `path`.
inline void emit_report(const SweepGrid& grid, ReportFormat format, const std::filesystem::path& path,
                        const std::string& title = "workflow execution time") {
  if (grid.cells.empty()) throw std::invalid_argument("nothing to report: grid is empty");
  auto out = open_out(path);
  switch (format) {
    case ReportFormat::csv: write_grid_csv(out, grid); break;
    case ReportFormat::svg_heatmap: write_svg_heatmap(out, grid, title); break;
    case ReportFormat::text_table: {
      out << "qualified%  size_MiB  label     std_ms  gray\n";
      char buf[160];
      for (const auto& c : grid.cells) {
        std::snprintf(buf, sizeof buf, "%10g  %8g  %-8s %8.1f  %.3f\n", c.qualified_pct,
                      static_cast<double>(c.size_bytes) / static_cast<double>(kMiB), c.label.c_str(), c.std_ms, c.gray);
        out << buf;
      }
      break;
    }
  }
  if (!out) throw IoError("failed writing report", path.string());
}

inline void emit_report(const std::vector<RecommendationRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) throw std::invalid_argument("nothing to report: no recommendation rows");
  auto out = open_out(path);
  write_recommendation_table(out, rows);
  if (!out) throw IoError("failed writing report", path.string());
}

}  // namespace tb
