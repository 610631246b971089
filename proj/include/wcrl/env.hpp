#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wcrl/config.hpp"
#include "wcrl/patterns.hpp"
#include "wcrl/playability.hpp"
#include "wcrl/rng.hpp"
#include "wcrl/tile_grid.hpp"
#include "wcrl/wave.hpp"

namespace wcrl {

// Observation channels: the alphabet without the player; 'M' reads as empty.
inline constexpr int kObservationChannels = 7;

constexpr int observation_channel(Tile t) {
  return t == Tile::Player ? 0 : static_cast<int>(t);
}

// (2l) x (2w) x 7 boolean tensor, HWC order. The target's top-left tile sits
// at (l, w); positions outside the level are zero.
struct Observation {
  int height = 0;
  int width = 0;
  int channels = kObservationChannels;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int row, int col, int channel) const {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + channel];
  }
  bool operator==(const Observation&) const = default;
};

Observation make_observation(const Availability& availability, Coord target);

using ActionMask = std::vector<std::uint8_t>;

std::size_t popcount(const ActionMask& mask);

enum class Outcome { Playable, Unplayable, Contradiction };
const char* outcome_name(Outcome o);

struct StepInfo {
  std::size_t collapsed_count = 0;
  std::size_t available_total = 0;
  int gold_reachable = 0;
  bool contradiction = false;
  bool playable = false;  // meaningful once done
};

struct ResetResult {
  Observation observation;
  ActionMask mask;
  Coord location;
  bool done = false;  // the reset state was already fully collapsed
  StepInfo info;
};

struct StepResult {
  Observation observation;
  ActionMask mask;  // all zero once done
  Coord location;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

class EnvError : public std::runtime_error {
 public:
  enum class Kind {
    CorpusError,
    PlacementFailed,
    RetryBudgetExceeded,
    MaskedActionChosen,
    EpisodeFinished,
    NoEpisode,
    BudgetExceeded,
  };
  EnvError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Shared step allowance; every Environment step (including policy lookahead
// on copies) draws from it.
using StepBudget = std::shared_ptr<std::atomic<std::int64_t>>;

// Builds the pattern model described by config from already-parsed inputs.
std::shared_ptr<const PatternModel> build_model(const EnvConfig& config,
                                                const std::vector<TileGrid>& inputs);

// One episode driver over the collapse loop: the target cell is always the
// most constrained one, the policy only picks its pattern. Copyable; copies
// share the corpus model and step budget.
class Environment {
 public:
  explicit Environment(const EnvConfig& config);
  Environment(const EnvConfig& config, std::vector<TileGrid> inputs);
  Environment(const EnvConfig& config, std::shared_ptr<const PatternModel> model);

  ResetResult reset(std::uint64_t seed);
  StepResult step(PatternId action);

  const EnvConfig& config() const { return config_; }
  const PatternModel& model() const { return *model_; }
  const std::shared_ptr<const PatternModel>& model_ptr() const { return model_; }
  std::size_t action_count() const { return model_->pattern_count(); }
  std::size_t lattice_cells() const { return template_->cell_count(); }

  bool started() const { return wave_.has_value(); }
  bool done() const { return done_; }
  const Wave& wave() const;
  Coord location() const { return location_; }
  const ActionMask& mask() const { return mask_; }
  int gold_reachable() const { return gold_; }
  const std::optional<PlayerPlacement>& placement() const { return placement_; }
  std::optional<Outcome> outcome() const { return outcome_; }

  Observation observation() const;
  // Availability after hypothetically applying action at the target, or
  // nullopt if that contradicts.
  std::optional<Availability> preview(PatternId action) const;
  // The generated level once the episode ended fully collapsed.
  std::optional<TileGrid> level() const;

  void set_step_budget(StepBudget budget) { budget_ = std::move(budget); }

 private:
  void init_template();
  StepInfo make_info() const;
  void refresh_target();

  EnvConfig config_;
  std::shared_ptr<const PatternModel> model_;
  std::shared_ptr<const Wave> template_;
  StepBudget budget_;

  std::optional<Wave> wave_;
  std::optional<PlayerPlacement> placement_;
  Coord location_;
  ActionMask mask_;
  int gold_ = 0;
  bool done_ = false;
  std::optional<Outcome> outcome_;
};

class Policy {
 public:
  virtual ~Policy() = default;
  // Returns a pattern id whose mask bit is set.
  virtual PatternId act(const Environment& env, Rng& rng) = 0;
};

// Per-step record; step 0 is the reset state (no action, no reward).
struct TraceStep {
  int step = 0;
  Coord location;
  std::size_t mask_popcount = 0;
  std::optional<PatternId> action;
  double reward = 0.0;
  std::size_t collapsed_count = 0;
  std::size_t available_total = 0;
  int gold_reachable = 0;
  bool contradiction = false;
  bool done = false;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  std::vector<TraceStep> steps;

  double total_reward() const;
  std::size_t action_steps() const { return steps.empty() ? 0 : steps.size() - 1; }
};

struct EpisodeResult {
  Outcome outcome = Outcome::Contradiction;
  std::optional<TileGrid> level;
  EpisodeTrace trace;
};

// Stream index used to seed the policy's rng inside a rollout.
inline constexpr std::uint64_t kPolicyStream = 0x706f6c;

EpisodeResult episode_rollout(Policy& policy, Environment& env, std::uint64_t seed);

// JSON lines, one record per step:
// {"episode_seed","step","loc":[r,c],"mask_popcount","action","reward",
//  "collapsed","available","gold_reachable","contradiction","done"}
std::string trace_to_jsonl(const EpisodeTrace& trace);
EpisodeTrace trace_from_jsonl(std::string_view text);

}  // namespace wcrl
