#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "triggerbench/compute.hpp"
#include "triggerbench/error.hpp"
#include "triggerbench/indicator.hpp"
#include "triggerbench/payload.hpp"
#include "triggerbench/simkernel.hpp"

namespace tb {

enum class TriggerPattern { P, C, M };

inline constexpr TriggerPattern kAllPatterns[] = {TriggerPattern::P, TriggerPattern::C, TriggerPattern::M};

inline std::string_view to_string(TriggerPattern p) {
  switch (p) {
    case TriggerPattern::P: return "P";
    case TriggerPattern::C: return "C";
    case TriggerPattern::M: return "M";
  }
  return "?";
}

inline TriggerPattern parse_pattern(std::string_view s) {
  if (s == "p" || s == "P") return TriggerPattern::P;
  if (s == "c" || s == "C") return TriggerPattern::C;
  if (s == "m" || s == "M") return TriggerPattern::M;
  throw ConfigError("unknown pattern '" + std::string(s) + "' (want p, c or m)");
}

inline std::vector<TriggerPattern> parse_patterns(std::string_view s) {
  if (s == "all") return {kAllPatterns, kAllPatterns + 3};
  std::vector<TriggerPattern> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto tok = s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    const auto p = parse_pattern(tok);
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::string analysis_kind(int j) { return "analysis-" + std::to_string(j); }

/// fixed + per_mib * size, in milliseconds.
struct Affine {
  double fixed_ms = 0.0;
  double per_mib_ms = 0.0;

  double at(std::uint64_t bytes) const {
    return fixed_ms + per_mib_ms * static_cast<double>(bytes) / static_cast<double>(kMiB);
  }
  bool operator==(const Affine&) const = default;
};

struct CostProfile {
  std::string name = "custom";
  Affine gen;
  Affine check;
  Affine io;
  Affine analysis;
  double trigger_latency_ms = 5.0;

  void validate() const {
    for (const Affine* a : {&gen, &check, &io, &analysis})
      if (a->fixed_ms < 0 || a->per_mib_ms < 0)
        throw ConfigError("cost profile '" + name + "' has a negative coefficient");
    if (trigger_latency_ms < 0) throw ConfigError("trigger latency must be non-negative");
  }

  bool operator==(const CostProfile&) const = default;
};

// Generation dominates io + analysis at every grid size.
inline CostProfile preset_a() {
  CostProfile p;
  p.name = "A";
  p.gen = {300.882, 0.488};
  p.check = {0.329, 1.656};
  p.io = {10.839, 2.223};
  p.analysis = {35.858, 0.157};
  p.trigger_latency_ms = 12.979;
  return p;
}

// Analysis dominates generation at every grid size.
inline CostProfile preset_b() {
  CostProfile p = preset_a();
  p.name = "B";
  p.gen = {259.32, 1.527};
  p.analysis = {563.461, 0.315};
  return p;
}

inline CostProfile preset_by_name(std::string_view s) {
  if (s == "a" || s == "A") return preset_a();
  if (s == "b" || s == "B") return preset_b();
  throw ConfigError("unknown preset '" + std::string(s) + "' (want a or b)");
}

enum class CostSource { synthetic, gray_scott };

struct GrayScottSource {
  GrayScottParams params;
  std::size_t grid = 64;
  int substeps = 1;  // solver iterations per produced step
  double threshold = 0.5;
  Direction direction = Direction::at_most;
  HistogramSpec histogram;
};

/// Everything needed to run or predict one experiment cell.
struct WorkloadSpec {
  std::vector<TriggerPattern> patterns{kAllPatterns, kAllPatterns + 3};
  int steps = 10;
  std::uint64_t size_bytes = 32 * kMiB;
  double qualified_fraction = 0.2;
  std::string distribution = "even";
  int instances = 1;
  CostSource source = CostSource::synthetic;
  CostProfile profile = preset_a();
  GrayScottSource gray_scott;
  int pool = 5;
  int reps = 3;
  std::uint64_t seed = 1;
  OversubscriptionMode oversubscription = OversubscriptionMode::queueing;
  double slowdown_penalty = 1.0;
  std::size_t staging_capacity = 4;
  bool shared_link = true;
  double similarity_epsilon = 0.05;

  void validate() const {
    if (patterns.empty()) throw ConfigError("at least one pattern is required");
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (!(qualified_fraction >= 0.0 && qualified_fraction <= 1.0))
      throw ConfigError("qualified percentage must lie in [0, 100]");
    if (size_bytes == 0) throw ConfigError("size must be positive");
    if (instances < 1) throw ConfigError("instances must be >= 1");
    if (pool < 1) throw ConfigError("pool must be >= 1");
    if (staging_capacity < 1) throw ConfigError("staging capacity must be >= 1");
    if (!(slowdown_penalty >= 1.0)) throw ConfigError("slowdown penalty must be >= 1");
    if (!(similarity_epsilon >= 0.0)) throw ConfigError("similarity epsilon must be non-negative");
    profile.validate();
    if (source == CostSource::gray_scott) gray_scott.params.validate();
    (void)schedule();
  }

  QualifiedSchedule schedule() const {
    return QualifiedSchedule::parse(distribution, steps, qualified_fraction);
  }

  double size_mib() const { return static_cast<double>(size_bytes) / static_cast<double>(kMiB); }
};

// Pool size after the TRIGGERBENCH_THREADS cap, which can only lower it.
inline int effective_pool(int requested) {
  if (const char* env = std::getenv("TRIGGERBENCH_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1 && cap < requested) return static_cast<int>(cap);
  }
  return requested;
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> known, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown key '" + it.key() + "' in " + std::string(where));
  }
}

template <class T>
T get_as(const json& j, const char* key, std::string_view where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

inline Affine affine_from_json(const json& j, std::string_view where) {
  reject_unknown(j, {"fixed_ms", "per_mib_ms"}, where);
  Affine a;
  if (j.contains("fixed_ms")) a.fixed_ms = get_as<double>(j, "fixed_ms", where);
  if (j.contains("per_mib_ms")) a.per_mib_ms = get_as<double>(j, "per_mib_ms", where);
  return a;
}

inline json affine_to_json(const Affine& a) { return {{"fixed_ms", a.fixed_ms}, {"per_mib_ms", a.per_mib_ms}}; }

}  // namespace detail

inline nlohmann::json to_json(const CostProfile& p) {
  using detail::affine_to_json;
  return {{"name", p.name},
          {"gen", affine_to_json(p.gen)},
          {"check", affine_to_json(p.check)},
          {"io", affine_to_json(p.io)},
          {"analysis", affine_to_json(p.analysis)},
          {"trigger_latency_ms", p.trigger_latency_ms}};
}

inline CostProfile profile_from_json(const nlohmann::json& j, CostProfile base) {
  using namespace detail;
  reject_unknown(j, {"name", "gen", "check", "io", "analysis", "trigger_latency_ms"}, "profile");
  if (j.contains("name")) base.name = get_as<std::string>(j, "name", "profile");
  if (j.contains("gen")) base.gen = affine_from_json(j["gen"], "profile.gen");
  if (j.contains("check")) base.check = affine_from_json(j["check"], "profile.check");
  if (j.contains("io")) base.io = affine_from_json(j["io"], "profile.io");
  if (j.contains("analysis")) base.analysis = affine_from_json(j["analysis"], "profile.analysis");
  if (j.contains("trigger_latency_ms"))
    base.trigger_latency_ms = get_as<double>(j, "trigger_latency_ms", "profile");
  return base;
}

inline nlohmann::json to_json(const WorkloadSpec& w) {
  nlohmann::json pats = nlohmann::json::array();
  for (auto p : w.patterns) pats.push_back(std::string(to_string(p)));
  const auto& g = w.gray_scott;
  return {{"patterns", pats},
          {"steps", w.steps},
          {"size_bytes", w.size_bytes},
          {"qualified_pct", w.qualified_fraction * 100.0},
          {"distribution", w.distribution},
          {"instances", w.instances},
          {"cost_source", w.source == CostSource::synthetic ? "synthetic" : "gray-scott"},
          {"profile", to_json(w.profile)},
          {"gray_scott",
           {{"Du", g.params.Du},
            {"Dv", g.params.Dv},
            {"F", g.params.F},
            {"k", g.params.k},
            {"dt", g.params.dt},
            {"noise_amplitude", g.params.noise_amplitude},
            {"grid", g.grid},
            {"substeps", g.substeps},
            {"threshold", g.threshold},
            {"direction", std::string(to_string(g.direction))},
            {"bins", g.histogram.bins}}},
          {"pool", w.pool},
          {"reps", w.reps},
          {"seed", w.seed},
          {"oversubscription", std::string(to_string(w.oversubscription))},
          {"slowdown_penalty", w.slowdown_penalty},
          {"staging_capacity", w.staging_capacity},
          {"shared_link", w.shared_link},
          {"similarity_epsilon", w.similarity_epsilon}};
}

/// Applies the keys present in `j` on top of `base`; unknown keys are errors.
inline WorkloadSpec workload_from_json(const nlohmann::json& j, WorkloadSpec base = {}) {
  using namespace detail;
  constexpr std::string_view where = "workload";
  reject_unknown(j,
                 {"patterns", "steps", "size_bytes", "size_mb", "qualified_pct", "distribution", "instances",
                  "cost_source", "preset", "profile", "gray_scott", "pool", "reps", "seed", "oversubscription",
                  "slowdown_penalty", "staging_capacity", "shared_link", "similarity_epsilon"},
                 where);
  WorkloadSpec w = std::move(base);
  if (j.contains("patterns")) {
    const auto& p = j["patterns"];
    if (p.is_string()) {
      w.patterns = parse_patterns(p.get<std::string>());
    } else {
      w.patterns.clear();
      for (const auto& e : p) w.patterns.push_back(parse_pattern(e.get<std::string>()));
    }
  }
  if (j.contains("steps")) w.steps = get_as<int>(j, "steps", where);
  if (j.contains("size_bytes") && j.contains("size_mb")) throw ConfigError("give size_bytes or size_mb, not both");
  if (j.contains("size_bytes")) w.size_bytes = get_as<std::uint64_t>(j, "size_bytes", where);
  if (j.contains("size_mb"))
    w.size_bytes = static_cast<std::uint64_t>(std::llround(get_as<double>(j, "size_mb", where) * kMiB));
  if (j.contains("qualified_pct")) w.qualified_fraction = get_as<double>(j, "qualified_pct", where) / 100.0;
  if (j.contains("distribution")) w.distribution = get_as<std::string>(j, "distribution", where);
  if (j.contains("instances")) w.instances = get_as<int>(j, "instances", where);
  if (j.contains("cost_source")) {
    const auto s = get_as<std::string>(j, "cost_source", where);
    if (s == "synthetic")
      w.source = CostSource::synthetic;
    else if (s == "gray-scott" || s == "gray_scott")
      w.source = CostSource::gray_scott;
    else
      throw ConfigError("unknown cost_source '" + s + "'");
  }
  if (j.contains("preset")) w.profile = preset_by_name(get_as<std::string>(j, "preset", where));
  if (j.contains("profile")) w.profile = profile_from_json(j["profile"], w.profile);
  if (j.contains("gray_scott")) {
    const auto& g = j["gray_scott"];
    constexpr std::string_view gw = "gray_scott";
    reject_unknown(g,
                   {"Du", "Dv", "F", "k", "dt", "noise_amplitude", "grid", "substeps", "threshold", "direction",
                    "bins"},
                   gw);
    auto& s = w.gray_scott;
    if (g.contains("Du")) s.params.Du = get_as<double>(g, "Du", gw);
    if (g.contains("Dv")) s.params.Dv = get_as<double>(g, "Dv", gw);
    if (g.contains("F")) s.params.F = get_as<double>(g, "F", gw);
    if (g.contains("k")) s.params.k = get_as<double>(g, "k", gw);
    if (g.contains("dt")) s.params.dt = get_as<double>(g, "dt", gw);
    if (g.contains("noise_amplitude")) s.params.noise_amplitude = get_as<double>(g, "noise_amplitude", gw);
    if (g.contains("grid")) s.grid = get_as<std::size_t>(g, "grid", gw);
    if (g.contains("substeps")) s.substeps = get_as<int>(g, "substeps", gw);
    if (g.contains("threshold")) s.threshold = get_as<double>(g, "threshold", gw);
    if (g.contains("direction")) s.direction = parse_direction(get_as<std::string>(g, "direction", gw));
    if (g.contains("bins")) s.histogram.bins = get_as<std::size_t>(g, "bins", gw);
    if (s.grid < 1 || s.substeps < 1) throw ConfigError("gray_scott grid and substeps must be >= 1");
  }
  if (j.contains("pool")) w.pool = get_as<int>(j, "pool", where);
  if (j.contains("reps")) w.reps = get_as<int>(j, "reps", where);
  if (j.contains("seed")) w.seed = get_as<std::uint64_t>(j, "seed", where);
  if (j.contains("oversubscription"))
    w.oversubscription = parse_oversubscription(get_as<std::string>(j, "oversubscription", where));
  if (j.contains("slowdown_penalty")) w.slowdown_penalty = get_as<double>(j, "slowdown_penalty", where);
  if (j.contains("staging_capacity")) w.staging_capacity = get_as<std::size_t>(j, "staging_capacity", where);
  if (j.contains("shared_link")) w.shared_link = get_as<bool>(j, "shared_link", where);
  if (j.contains("similarity_epsilon")) w.similarity_epsilon = get_as<double>(j, "similarity_epsilon", where);
  return w;
}

inline WorkloadSpec load_workload(const std::string& path, WorkloadSpec base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config", path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return workload_from_json(j, std::move(base));
}

}  // namespace tb
