#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wcrl/patterns.hpp"

namespace wcrl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One "key = value" line. '#' starts a comment; blank lines are skipped.
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

std::vector<ConfigEntry> parse_key_values(std::string_view text);

bool parse_bool(const ConfigEntry& e);
long long parse_int(const ConfigEntry& e);
std::uint64_t parse_u64(const ConfigEntry& e);
double parse_double(const ConfigEntry& e);
// Comma-separated list; relative entries are resolved against base_dir.
std::vector<std::filesystem::path> parse_paths(const ConfigEntry& e,
                                               const std::filesystem::path& base_dir);

std::string read_file(const std::filesystem::path& path);

struct RewardWeights {
  double gold = 1.0;
  double completion_bonus = 10.0;
  double contradiction_penalty = -20.0;
};

struct EnvConfig {
  std::vector<std::filesystem::path> inputs;
  int n = 3;
  bool exclude_rare = false;
  bool keep_player_patterns = true;
  bool random_collapse = false;
  double random_collapse_max_fraction = 0.10;
  AdjacencyMode adjacency = AdjacencyMode::Observed;
  RewardWeights reward;
  int level_height = 22;
  int level_width = 32;
  std::uint64_t seed = 0;
  int placement_retries = 20;
  int restart_budget = 20;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

// Keys: inputs, n, exclude_rare, keep_player_patterns, random_collapse,
// random_collapse_max_fraction, adjacency, w_gold, completion_bonus,
// contradiction_penalty, level_height, level_width, seed, placement_retries,
// restart_budget. Unknown or repeated keys are errors.
EnvConfig parse_env_config(std::string_view text, const std::filesystem::path& base_dir);
EnvConfig load_env_config(const std::filesystem::path& path);
std::string format_env_config(const EnvConfig& config);

}  // namespace wcrl
