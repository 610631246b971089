#include "wcrl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace wcrl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(const ConfigEntry& e, const std::string& why) {
  throw ConfigError("line " + std::to_string(e.line) + ": " + e.key + ": " + why);
}

}  // namespace

std::vector<ConfigEntry> parse_key_values(std::string_view text) {
  std::vector<ConfigEntry> entries;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    ConfigEntry e{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))),
                  line_no};
    if (e.key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(e.key).second) fail(e, "repeated key");
    entries.push_back(std::move(e));
  }
  return entries;
}

bool parse_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "on" || e.value == "1") return true;
  if (e.value == "false" || e.value == "off" || e.value == "0") return false;
  fail(e, "expected a boolean, got '" + e.value + "'");
}

long long parse_int(const ConfigEntry& e) {
  long long v = 0;
  const auto* first = e.value.data();
  const auto* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) fail(e, "expected an integer, got '" + e.value + "'");
  return v;
}

std::uint64_t parse_u64(const ConfigEntry& e) {
  std::uint64_t v = 0;
  const auto* first = e.value.data();
  const auto* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    fail(e, "expected a non-negative integer, got '" + e.value + "'");
  }
  return v;
}

double parse_double(const ConfigEntry& e) {
  // from_chars for double is missing from older libstdc++.
  std::istringstream in(e.value);
  in.imbue(std::locale::classic());
  double v = 0;
  in >> v;
  if (!in || !in.eof() || !std::isfinite(v)) fail(e, "expected a finite number, got '" + e.value + "'");
  return v;
}

std::vector<std::filesystem::path> parse_paths(const ConfigEntry& e,
                                               const std::filesystem::path& base_dir) {
  std::vector<std::filesystem::path> out;
  std::string_view rest = e.value;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (!item.empty()) {
      std::filesystem::path p{std::string(item)};
      out.push_back(p.is_absolute() ? p : base_dir / p);
    }
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void EnvConfig::validate() const {
  if (inputs.empty()) throw ConfigError("inputs: at least one level is required");
  if (n < 2) throw ConfigError("n: window must be >= 2");
  if (!(random_collapse_max_fraction >= 0.0 && random_collapse_max_fraction <= 1.0)) {
    throw ConfigError("random_collapse_max_fraction: must be in [0, 1]");
  }
  for (double w : {reward.gold, reward.completion_bonus, reward.contradiction_penalty}) {
    if (!std::isfinite(w)) throw ConfigError("reward weights must be finite");
  }
  if (level_height < n || level_width < n) {
    throw ConfigError("level dimensions must be at least the window size");
  }
  if (placement_retries < 0 || restart_budget < 0) {
    throw ConfigError("retry budgets must be non-negative");
  }
}

EnvConfig parse_env_config(std::string_view text, const std::filesystem::path& base_dir) {
  EnvConfig cfg;
  for (const ConfigEntry& e : parse_key_values(text)) {
    if (e.key == "inputs") {
      cfg.inputs = parse_paths(e, base_dir);
    } else if (e.key == "n") {
      cfg.n = static_cast<int>(parse_int(e));
    } else if (e.key == "exclude_rare") {
      cfg.exclude_rare = parse_bool(e);
    } else if (e.key == "keep_player_patterns") {
      cfg.keep_player_patterns = parse_bool(e);
    } else if (e.key == "random_collapse") {
      cfg.random_collapse = parse_bool(e);
    } else if (e.key == "random_collapse_max_fraction") {
      cfg.random_collapse_max_fraction = parse_double(e);
    } else if (e.key == "adjacency") {
      const auto mode = parse_adjacency_mode(e.value);
      if (!mode) fail(e, "expected observed or overlap");
      cfg.adjacency = *mode;
    } else if (e.key == "w_gold") {
      cfg.reward.gold = parse_double(e);
    } else if (e.key == "completion_bonus") {
      cfg.reward.completion_bonus = parse_double(e);
    } else if (e.key == "contradiction_penalty") {
      cfg.reward.contradiction_penalty = parse_double(e);
    } else if (e.key == "level_height") {
      cfg.level_height = static_cast<int>(parse_int(e));
    } else if (e.key == "level_width") {
      cfg.level_width = static_cast<int>(parse_int(e));
    } else if (e.key == "seed") {
      cfg.seed = parse_u64(e);
    } else if (e.key == "placement_retries") {
      cfg.placement_retries = static_cast<int>(parse_int(e));
    } else if (e.key == "restart_budget") {
      cfg.restart_budget = static_cast<int>(parse_int(e));
    } else {
      fail(e, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

EnvConfig load_env_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_env_config(text, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_env_config(const EnvConfig& c) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(10);
  out << "inputs = ";
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    out << (i ? ", " : "") << c.inputs[i].string();
  }
  out << "\nn = " << c.n << "\nexclude_rare = " << (c.exclude_rare ? "true" : "false")
      << "\nkeep_player_patterns = " << (c.keep_player_patterns ? "true" : "false")
      << "\nrandom_collapse = " << (c.random_collapse ? "true" : "false")
      << "\nrandom_collapse_max_fraction = " << c.random_collapse_max_fraction
      << "\nadjacency = " << adjacency_mode_name(c.adjacency) << "\nw_gold = " << c.reward.gold
      << "\ncompletion_bonus = " << c.reward.completion_bonus
      << "\ncontradiction_penalty = " << c.reward.contradiction_penalty
      << "\nlevel_height = " << c.level_height << "\nlevel_width = " << c.level_width
      << "\nseed = " << c.seed << "\nplacement_retries = " << c.placement_retries
      << "\nrestart_budget = " << c.restart_budget << "\n";
  return out.str();
}

}  // namespace wcrl
