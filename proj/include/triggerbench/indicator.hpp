#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "triggerbench/clock.hpp"
#include "triggerbench/compute.hpp"
#include "triggerbench/error.hpp"
#include "triggerbench/simkernel.hpp"

namespace tb {

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::uint64_t> counts;

  std::size_t bin_count() const { return counts.size(); }
  double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double center(std::size_t bin) const { return lo + (static_cast<double>(bin) + 0.5) * width(); }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

inline Histogram build_histogram(std::span<const double> values, double lo, double hi,
                                 std::size_t bin_count) {
  if (!(lo < hi)) throw std::invalid_argument("histogram range requires lo < hi");
  if (bin_count < 2) throw std::invalid_argument("histogram needs at least two bins");
  if (values.empty()) throw std::invalid_argument("cannot build a histogram of an empty field");
  Histogram h{lo, hi, std::vector<std::uint64_t>(bin_count, 0)};
  const double scale = static_cast<double>(bin_count) / (hi - lo);
  const auto last = static_cast<std::ptrdiff_t>(bin_count) - 1;
  for (double x : values) {
    if (std::isnan(x)) throw std::invalid_argument("histogram input contains NaN");
    const double pos = std::floor((x - lo) * scale);
    std::ptrdiff_t bin = 0;
    if (pos >= static_cast<double>(last))
      bin = last;
    else if (pos > 0)
      bin = static_cast<std::ptrdiff_t>(pos);
    ++h.counts[static_cast<std::size_t>(bin)];
  }
  return h;
}

inline Histogram build_histogram(const ScalarField& field, double lo = 0.0, double hi = 1.0,
                                 std::size_t bin_count = 100) {
  return build_histogram(field.values(), lo, hi, bin_count);
}

inline double peak_position(const Histogram& h) {
  if (h.counts.empty()) throw std::invalid_argument("histogram has no bins");
  const auto it = std::max_element(h.counts.begin(), h.counts.end());
  return h.center(static_cast<std::size_t>(it - h.counts.begin()));
}

enum class Direction { at_least, at_most };

inline Direction parse_direction(std::string_view s) {
  if (s == "at-least" || s == "at_least") return Direction::at_least;
  if (s == "at-most" || s == "at_most") return Direction::at_most;
  throw ConfigError("unknown indicator direction '" + std::string(s) + "'");
}

inline std::string_view to_string(Direction d) {
  return d == Direction::at_least ? "at-least" : "at-most";
}

struct IndicatorResult {
  int step_index = 0;
  double peak_position = 0.0;
  bool qualified = false;
  double check_cost_ms = 0.0;
};

struct HistogramSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 100;
};

inline bool passes(double peak, double threshold, Direction dir) {
  return dir == Direction::at_least ? peak >= threshold : peak <= threshold;
}

inline IndicatorResult check(const ScalarField& field, double threshold, Direction dir,
                             const HistogramSpec& hs = {}, int step_index = 0) {
  if (threshold < hs.lo || threshold > hs.hi)
    throw ConfigError("indicator threshold outside the histogram range");
  const auto t0 = Clock::now();
  const Histogram h = build_histogram(field.values(), hs.lo, hs.hi, hs.bins);
  const double peak = peak_position(h);
  IndicatorResult r;
  r.step_index = step_index;
  r.peak_position = peak;
  r.qualified = passes(peak, threshold, dir);
  r.check_cost_ms = ms_between(t0, Clock::now());
  return r;
}

/// Which steps of a run carry qualified data, fixed ahead of time.
class QualifiedSchedule {
 public:
  enum class Mode { even, block };

  // round(p*N) steps spread evenly: step i qualifies when floor(i*m/N) advances.
  static QualifiedSchedule even(int total_steps, double fraction) {
    if (total_steps < 1) throw ConfigError("schedule needs at least one step");
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("qualified fraction must lie in [0, 1]");
    QualifiedSchedule s(total_steps, Mode::even);
    s.fraction_ = fraction;
    const long long n = total_steps;
    const long long m = std::llround(fraction * static_cast<double>(n));
    for (long long i = 1; i <= n; ++i)
      if ((i * m) / n > ((i - 1) * m) / n) s.resolved_.push_back(static_cast<int>(i));
    s.build_mask();
    return s;
  }

  static QualifiedSchedule block(int total_steps, int first, int last) {
    if (total_steps < 1) throw ConfigError("schedule needs at least one step");
    if (first < 1 || last < first || last > total_steps)
      throw ConfigError("block " + std::to_string(first) + "-" + std::to_string(last) +
                        " outside [1, " + std::to_string(total_steps) + "]");
    QualifiedSchedule s(total_steps, Mode::block);
    s.first_ = first;
    s.last_ = last;
    for (int i = first; i <= last; ++i) s.resolved_.push_back(i);
    s.build_mask();
    return s;
  }

  /// "even" (with `fraction`) or "block:a-b".
  static QualifiedSchedule parse(std::string_view distribution, int total_steps, double fraction) {
    if (distribution == "even") return even(total_steps, fraction);
    if (distribution.starts_with("block:")) {
      const auto body = distribution.substr(6);
      const auto dash = body.find('-');
      int a = 0, b = 0;
      if (dash != std::string_view::npos) {
        auto r1 = std::from_chars(body.data(), body.data() + dash, a);
        auto r2 = std::from_chars(body.data() + dash + 1, body.data() + body.size(), b);
        if (r1.ec == std::errc{} && r1.ptr == body.data() + dash && r2.ec == std::errc{} &&
            r2.ptr == body.data() + body.size())
          return block(total_steps, a, b);
      }
    }
    throw ConfigError("bad distribution '" + std::string(distribution) + "' (want even or block:a-b)");
  }

  int total_steps() const { return total_; }
  Mode mode() const { return mode_; }
  double fraction() const {
    return mode_ == Mode::even ? fraction_ : static_cast<double>(resolved_.size()) / total_;
  }
  const std::vector<int>& resolved() const { return resolved_; }
  std::size_t count() const { return resolved_.size(); }
  bool contains(int step) const {
    return step >= 1 && step <= total_ && mask_[static_cast<std::size_t>(step)];
  }

  std::string describe() const {
    return mode_ == Mode::even ? std::string("even")
                               : "block:" + std::to_string(first_) + "-" + std::to_string(last_);
  }

 private:
  QualifiedSchedule(int total, Mode mode) : total_(total), mode_(mode) {}
  void build_mask() {
    mask_.assign(static_cast<std::size_t>(total_) + 1, false);
    for (int i : resolved_) mask_[static_cast<std::size_t>(i)] = true;
  }

  int total_;
  Mode mode_;
  double fraction_ = 0.0;
  int first_ = 0, last_ = 0;
  std::vector<int> resolved_;
  std::vector<bool> mask_;
};

/// Deterministic stand-in for the histogram check: spends `cost_ms` of compute
/// and reports the verdict from the schedule. Qualified steps report peak 0.0,
/// others 1.0, so the verdict reads the same as an at-most 0.5 threshold.
inline IndicatorResult scripted_check(const QualifiedSchedule& schedule, int step_index, double cost_ms,
                                      ComputeArbiter& cpu) {
  if (step_index < 1 || step_index > schedule.total_steps())
    throw ConfigError("step " + std::to_string(step_index) + " outside the schedule");
  IndicatorResult r;
  r.step_index = step_index;
  r.qualified = schedule.contains(step_index);
  r.peak_position = r.qualified ? 0.0 : 1.0;
  r.check_cost_ms = cpu.run(cost_ms);
  return r;
}

inline IndicatorResult scripted_check(const QualifiedSchedule& schedule, int step_index, double cost_ms) {
  ComputeArbiter cpu;
  return scripted_check(schedule, step_index, cost_ms, cpu);
}

}  // namespace tb
