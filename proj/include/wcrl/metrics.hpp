#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wcrl/env.hpp"
#include "wcrl/tile_grid.hpp"

namespace wcrl {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultKlEpsilon = 1e-5;

// Window counts of one level, keyed by the window's n*n characters.
struct PatternDistribution {
  std::map<std::string, double> counts;
  double total = 0.0;

  static PatternDistribution of(const TileGrid& grid, int n);
};

// KL(P_a || P_b) between the n x n window distributions of two levels. Both
// are taken over the union of their windows, epsilon is added to every
// probability and each side is renormalised.
double tp_kldiv(const TileGrid& a, const TileGrid& b, int n = 3,
                double epsilon = kDefaultKlEpsilon);

// Mean tp_kldiv over all ordered pairs (i != j).
double pairwise_diversity(std::span<const TileGrid> levels, int n = 3,
                          double epsilon = kDefaultKlEpsilon);

struct EpisodeRecord {
  Outcome outcome = Outcome::Contradiction;
  std::optional<TileGrid> level;
  EpisodeTrace trace;
};

struct BatchReport {
  std::size_t episodes = 0;
  double playable_rate = 0.0;
  double unplayable_rate = 0.0;
  double contradiction_rate = 0.0;
  // Completed levels with at least one reachable gold, over all episodes.
  double any_gold_rate = 0.0;
  std::size_t playable_levels = 0;
  // Pairwise TP-KLDiv over playable levels; empty with fewer than two.
  std::optional<double> diversity;
  // Mean over episodes that reached step t (t = 0 is the reset state).
  std::vector<double> collapsed_curve;
  std::vector<double> available_curve;
  std::vector<double> mask_curve;
};

BatchReport batch_evaluate(std::span<const EpisodeRecord> episodes, int n = 3,
                           double epsilon = kDefaultKlEpsilon);

nlohmann::ordered_json to_json(const BatchReport& report);

// config_id,seed,playable,unplayable,contradiction,diversity
std::string csv_header();
std::string csv_row(const std::string& config_id, std::uint64_t seed, const BatchReport& report);
// Row for a cell that did not finish; rates are left empty.
std::string csv_failed_row(const std::string& config_id, std::uint64_t seed);

// {"step":t,"collapsed":..,"available":..,"mask":..} per line.
std::string curves_to_jsonl(const BatchReport& report);

}  // namespace wcrl
