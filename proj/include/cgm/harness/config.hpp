#pragma once

/**
 * @file
 * @brief Experiment configuration: flat `key = value` files, one key per line,
 * `#` starts a comment. List-valued keys take comma-separated values.
 *
 *   problem      rap | hbg
 *   d            dimension (rap: d >= 2, hbg: d >= 1 per player)
 *   beta         hbg game parameter(s) in (0, 1)
 *   seed         unsigned integer
 *   iters        horizon(s) T (alias: horizons)
 *   schedule     constant | varying, or both (rap)
 *   baselines    run GDA and EG next to CGM (hbg)
 *   check_bounds certify the convergence bounds on every run
 *   out          output directory
 *   plots        emit SVG figures
 *   gda_eta      GDA step size
 *   reference_cache  reference-solution cache file (default <out>/reference_cache.txt)
 */

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cgm/baselines.hpp"
#include "cgm/cgm_min.hpp"
#include "cgm/error.hpp"
#include "cgm/harness/csv.hpp"

namespace cgm::harness {

enum class ProblemKind { Rap, Hbg };

inline std::string to_string(ProblemKind kind) { return kind == ProblemKind::Rap ? "rap" : "hbg"; }

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::Rap;
  Index d = 50;
  std::vector<double> betas{0.8};
  std::uint64_t seed = 42;
  std::vector<std::size_t> horizons;  ///< empty until resolved; see resolved_horizons
  std::vector<ScheduleKind> schedules{ScheduleKind::Constant};
  bool run_baselines = false;
  bool check_bounds = false;
  std::filesystem::path out_dir = "results";
  bool plots = true;
  double gda_eta = kGdaDefaultStep;
  std::optional<std::filesystem::path> reference_cache;

  std::filesystem::path cache_path() const {
    return reference_cache.value_or(out_dir / "reference_cache.txt");
  }
};

struct ConfigValue {
  std::string value;
  std::size_t line = 0;  ///< 0 for values that came from flags
};

/// Raw key/value pairs in the order the last assignment appeared.
using ConfigEntries = std::map<std::string, ConfigValue>;

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{
      "problem", "d",     "beta",    "seed",           "iters",  "horizons", "schedule",
      "baselines", "check_bounds", "out", "plots", "gda_eta", "reference_cache"};
  return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline std::string canonical_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  if (key == "horizons") key = "iters";
  return key;
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] inline void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ValidationError, "field '" + field + "': " + why);
}

inline double parse_double(const std::string& field, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    invalid(field, "'" + text + "' is not a number");
  }
  if (used != text.size()) invalid(field, "'" + text + "' is not a number");
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& field, const std::string& text) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
      })) {
    invalid(field, "'" + text + "' is not a non-negative integer");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    invalid(field, "'" + text + "' is out of range");
  }
}

inline bool parse_bool(const std::string& field, std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  invalid(field, "'" + text + "' is not a boolean");
}

}  // namespace detail

/// Parses `key = value` lines. Unknown keys and malformed lines raise
/// ParseError carrying the 1-based line number.
inline ConfigEntries parse_config_text(const std::string& text) {
  ConfigEntries entries;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  const auto& known = known_config_keys();
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": missing key");
    }
    if (std::find(known.begin(), known.end(), detail::canonical_key(key)) == known.end()) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    entries[detail::canonical_key(key)] = ConfigValue{value, line_no};
  }
  return entries;
}

inline ConfigEntries parse_config_file(const std::filesystem::path& path) {
  return parse_config_text(read_file(path));
}

/// Overlays `overrides` (e.g. command-line flags) on top of `base`.
inline ConfigEntries merge_entries(ConfigEntries base, const ConfigEntries& overrides) {
  for (const auto& [key, value] : overrides) base[detail::canonical_key(key)] = value;
  return base;
}

/// Converts raw entries to a validated configuration. Errors name the field.
inline ExperimentConfig build_config(const ConfigEntries& entries) {
  ExperimentConfig cfg;
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second.value;
  };

  if (const auto* v = get("problem")) {
    if (*v == "rap") cfg.problem = ProblemKind::Rap;
    else if (*v == "hbg") cfg.problem = ProblemKind::Hbg;
    else detail::invalid("problem", "expected rap or hbg, got '" + *v + "'");
  }
  if (const auto* v = get("d")) cfg.d = static_cast<Index>(detail::parse_unsigned("d", *v));
  if (const auto* v = get("seed")) cfg.seed = detail::parse_unsigned("seed", *v);
  if (const auto* v = get("beta")) {
    cfg.betas.clear();
    for (const auto& item : detail::split_list(*v)) cfg.betas.push_back(detail::parse_double("beta", item));
    if (cfg.betas.empty()) detail::invalid("beta", "no values");
  }
  if (const auto* v = get("iters")) {
    for (const auto& item : detail::split_list(*v)) {
      cfg.horizons.push_back(static_cast<std::size_t>(detail::parse_unsigned("iters", item)));
    }
    if (cfg.horizons.empty()) detail::invalid("iters", "no horizons given");
  }
  if (const auto* v = get("schedule")) {
    cfg.schedules.clear();
    for (const auto& item : detail::split_list(*v)) {
      if (item == "constant") cfg.schedules.push_back(ScheduleKind::Constant);
      else if (item == "varying") cfg.schedules.push_back(ScheduleKind::Varying);
      else detail::invalid("schedule", "expected constant or varying, got '" + item + "'");
    }
    if (cfg.schedules.empty()) detail::invalid("schedule", "no values");
  }
  if (const auto* v = get("baselines")) cfg.run_baselines = detail::parse_bool("baselines", *v);
  if (const auto* v = get("check_bounds")) cfg.check_bounds = detail::parse_bool("check_bounds", *v);
  if (const auto* v = get("plots")) cfg.plots = detail::parse_bool("plots", *v);
  if (const auto* v = get("out")) {
    if (v->empty()) detail::invalid("out", "empty path");
    cfg.out_dir = *v;
  }
  if (const auto* v = get("gda_eta")) cfg.gda_eta = detail::parse_double("gda_eta", *v);
  if (const auto* v = get("reference_cache")) {
    if (!v->empty()) cfg.reference_cache = std::filesystem::path(*v);
  }

  if (cfg.horizons.empty()) {
    cfg.horizons = cfg.problem == ProblemKind::Rap ? std::vector<std::size_t>{2000}
                                                   : std::vector<std::size_t>{1000};
  }
  for (std::size_t T : cfg.horizons)
    if (T < 1) detail::invalid("iters", "horizons must be at least 1");
  if (cfg.problem == ProblemKind::Rap && cfg.d < 2) detail::invalid("d", "rap requires d >= 2");
  if (cfg.problem == ProblemKind::Hbg && cfg.d < 1) detail::invalid("d", "hbg requires d >= 1");
  if (cfg.problem == ProblemKind::Hbg) {
    for (double b : cfg.betas)
      if (!(b > 0.0 && b < 1.0)) detail::invalid("beta", "must lie in (0, 1), got " + format_number(b));
  }
  if (!(cfg.gda_eta > 0.0)) detail::invalid("gda_eta", "must be positive");
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  return build_config(parse_config_text(text));
}

}  // namespace cgm::harness
