#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "wcrl/config.hpp"
#include "wcrl/metrics.hpp"
#include "wcrl/policies.hpp"

namespace wcrl {

enum class GridPolicy { ES, Greedy, Random };
const char* grid_policy_name(GridPolicy p);

struct GridConfig {
  std::vector<std::filesystem::path> si;
  std::vector<std::filesystem::path> mi;
  std::vector<std::filesystem::path> div_mi;
  int models_per_config = 2;
  int eval_levels_per_model = 100;
  int level_height = 11;
  int level_width = 16;
  int n = 3;
  bool keep_player_patterns = true;
  AdjacencyMode adjacency = AdjacencyMode::Observed;
  double random_collapse_max_fraction = 0.10;
  RewardWeights reward;
  GridPolicy policy = GridPolicy::ES;
  int greedy_depth = 1;
  ESConfig es{.population = 16, .sigma = 0.1, .alpha = 0.02, .generations = 2000,
              .episodes_per_eval = 4, .seed = 0, .k = 4, .threads = 1};
  // Environment steps allowed per cell, training and evaluation together;
  // 0 means unlimited.
  std::int64_t step_budget = 0;
  std::uint64_t seed = 0;
  int threads = 0;  // cells run concurrently on up to this many workers

  void validate() const;
};

// Plain list of level paths, one per line, '#' comments allowed. Relative
// entries resolve against the manifest's directory.
std::vector<std::filesystem::path> load_manifest(const std::filesystem::path& path);

// Keys: si, mi, div_mi (level paths, comma separated), si_manifest,
// mi_manifest, div_mi_manifest, models_per_config, eval_levels_per_model,
// level_height, level_width, n, keep_player_patterns, adjacency,
// random_collapse_max_fraction, w_gold, completion_bonus,
// contradiction_penalty, policy (es|greedy|random), greedy_depth,
// es_population, es_sigma, es_alpha, es_generations, es_episodes_per_eval,
// es_k, step_budget, seed, threads.
GridConfig parse_grid_config(std::string_view text, const std::filesystem::path& base_dir);
GridConfig load_grid_config(const std::filesystem::path& path);

struct GridCell {
  std::string label;  // SI, SI+RR, MI+RC, div-MI+RR+RC, ...
  int input_set = 0;  // 0 SI, 1 MI, 2 div-MI
  bool exclude_rare = false;
  bool random_collapse = false;
};

// The 12 cells in table order.
std::vector<GridCell> grid_cells();

struct GridRow {
  std::string label;
  int model = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  BatchReport report;
  std::vector<GenerationStats> training_curve;
};

struct GridResult {
  std::vector<GridRow> rows;  // cell-major, model-minor

  std::string csv() const;
  // Per-label means over the models that finished.
  std::string summary_table() const;
};

// Trains (for the ES policy) and evaluates every cell. Random collapse only
// shapes training starts; evaluation always begins from the empty wave. When
// out_dir is non-empty, writes results.csv, summary.txt, reports/*.json,
// curves/*.jsonl and training/*.jsonl there.
GridResult run_grid(const GridConfig& config, const std::filesystem::path& out_dir = {},
                    const std::function<void(const GridRow&)>& on_row = {});

}  // namespace wcrl
