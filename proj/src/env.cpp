#include "wcrl/env.hpp"

#include <cmath>
#include <sstream>

namespace wcrl {

Observation make_observation(const Availability& availability, Coord target) {
  Observation obs;
  obs.height = 2 * availability.height;
  obs.width = 2 * availability.width;
  obs.data.assign(static_cast<std::size_t>(obs.height) * obs.width * obs.channels, 0);
  for (int r = 0; r < availability.height; ++r) {
    const int i = r - target.row + availability.height;
    if (i < 0 || i >= obs.height) continue;
    for (int c = 0; c < availability.width; ++c) {
      const int j = c - target.col + availability.width;
      if (j < 0 || j >= obs.width) continue;
      const SymbolSet s = availability.at(r, c);
      std::uint8_t* cell =
          obs.data.data() + (static_cast<std::size_t>(i) * obs.width + j) * obs.channels;
      for (Tile t : kAllTiles) {
        if (s & symbol_bit(t)) cell[observation_channel(t)] = 1;
      }
    }
  }
  return obs;
}

std::size_t popcount(const ActionMask& mask) {
  std::size_t n = 0;
  for (auto b : mask) n += b != 0;
  return n;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Playable: return "playable";
    case Outcome::Unplayable: return "unplayable";
    case Outcome::Contradiction: return "contradiction";
  }
  return "?";
}

std::shared_ptr<const PatternModel> build_model(const EnvConfig& config,
                                                const std::vector<TileGrid>& inputs) {
  PatternSet ps = extract_patterns(inputs, config.n);
  if (config.exclude_rare) ps = exclude_rare(ps, config.keep_player_patterns);
  AdjacencyRules rules = learn_adjacency(ps, inputs, config.adjacency);
  return std::make_shared<const PatternModel>(std::move(ps), std::move(rules));
}

namespace {

std::vector<TileGrid> load_inputs(const EnvConfig& config) {
  std::vector<TileGrid> inputs;
  for (const auto& path : config.inputs) {
    try {
      inputs.push_back(load_level(path));
    } catch (const std::exception& e) {
      throw EnvError(EnvError::Kind::CorpusError, e.what());
    }
  }
  return inputs;
}

std::shared_ptr<const PatternModel> checked_model(const EnvConfig& config,
                                                  const std::vector<TileGrid>& inputs) {
  try {
    return build_model(config, inputs);
  } catch (const PatternError& e) {
    throw EnvError(EnvError::Kind::CorpusError, e.what());
  }
}

}  // namespace

Environment::Environment(const EnvConfig& config)
    : Environment(config, load_inputs(config)) {}

Environment::Environment(const EnvConfig& config, std::vector<TileGrid> inputs)
    : Environment(config, checked_model(config, inputs)) {}

Environment::Environment(const EnvConfig& config, std::shared_ptr<const PatternModel> model)
    : config_(config), model_(std::move(model)) {
  init_template();
}

void Environment::init_template() {
  try {
    get_player_patterns(model_->patterns());
  } catch (const PatternError& e) {
    throw EnvError(EnvError::Kind::CorpusError, e.what());
  }
  Wave w(model_, config_.level_height, config_.level_width, 0);
  if (w.propagate_all()) {
    throw EnvError(EnvError::Kind::CorpusError,
                   "adjacency rules admit no level of " + std::to_string(config_.level_height) +
                       "x" + std::to_string(config_.level_width));
  }
  template_ = std::make_shared<const Wave>(std::move(w));
}

const Wave& Environment::wave() const {
  if (!wave_) throw EnvError(EnvError::Kind::NoEpisode, "reset has not been called");
  return *wave_;
}

StepInfo Environment::make_info() const {
  StepInfo info;
  info.collapsed_count = wave_->collapsed_count();
  info.available_total = wave_->total_available();
  info.gold_reachable = gold_;
  info.contradiction = wave_->dead();
  info.playable = outcome_ == Outcome::Playable;
  return info;
}

void Environment::refresh_target() {
  location_ = wave_->next_cell_to_collapse();
  mask_.assign(model_->pattern_count(), 0);
  bits::for_each(wave_->domain_bits(location_), [&](std::size_t p) { mask_[p] = 1; });
}

ResetResult Environment::reset(std::uint64_t seed) {
  done_ = false;
  outcome_.reset();
  placement_.reset();
  wave_.reset();

  int placement_failures = 0;
  int restarts = 0;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Wave w = *template_;
    w.reseed(derive_seed(seed, attempt));
    PlayerPlacement placed;
    if (place_player(w, &placed)) {
      if (++placement_failures > config_.placement_retries) {
        throw EnvError(EnvError::Kind::PlacementFailed,
                       "player placement contradicted " + std::to_string(placement_failures) +
                           " times");
      }
      continue;
    }
    if (config_.random_collapse) {
      const auto limit = static_cast<std::size_t>(
          std::ceil(config_.random_collapse_max_fraction * static_cast<double>(w.cell_count())));
      const std::size_t k = w.rng().uniform_index(limit + 1);
      if (random_partial_collapse(w, k)) {
        if (++restarts > config_.restart_budget) {
          throw EnvError(EnvError::Kind::RetryBudgetExceeded,
                         "random collapse contradicted " + std::to_string(restarts) + " times");
        }
        continue;
      }
    }
    wave_ = std::move(w);
    placement_ = placed;
    break;
  }

  const ReachabilityReport report = analyze(wave_->tile_availability());
  gold_ = report.gold_reachable;
  if (wave_->fully_collapsed()) {
    done_ = true;
    outcome_ = report.playable ? Outcome::Playable : Outcome::Unplayable;
    location_ = placement_->cell;
    mask_.assign(model_->pattern_count(), 0);
  } else {
    refresh_target();
  }
  return {observation(), mask_, location_, done_, make_info()};
}

StepResult Environment::step(PatternId action) {
  if (!wave_) throw EnvError(EnvError::Kind::NoEpisode, "reset has not been called");
  if (done_) throw EnvError(EnvError::Kind::EpisodeFinished, "episode already finished");
  if (action >= mask_.size() || !mask_[action]) {
    throw EnvError(EnvError::Kind::MaskedActionChosen,
                   "action " + std::to_string(action) + " is masked out");
  }
  if (budget_ && budget_->fetch_sub(1) <= 0) {
    throw EnvError(EnvError::Kind::BudgetExceeded, "step budget exhausted");
  }

  StepResult result;
  if (wave_->apply_pattern(location_, action)) {
    done_ = true;
    outcome_ = Outcome::Contradiction;
    result.reward = config_.reward.contradiction_penalty;
  } else {
    const ReachabilityReport report = analyze(wave_->tile_availability());
    result.reward = config_.reward.gold * static_cast<double>(report.gold_reachable - gold_);
    gold_ = report.gold_reachable;
    if (wave_->fully_collapsed()) {
      done_ = true;
      outcome_ = report.playable ? Outcome::Playable : Outcome::Unplayable;
      if (report.playable) result.reward += config_.reward.completion_bonus;
    }
  }

  if (done_) {
    mask_.assign(model_->pattern_count(), 0);
  } else {
    refresh_target();
  }
  result.observation = observation();
  result.mask = mask_;
  result.location = location_;
  result.done = done_;
  result.info = make_info();
  return result;
}

Observation Environment::observation() const {
  return make_observation(wave().tile_availability(), location_);
}

std::optional<Availability> Environment::preview(PatternId action) const {
  Wave copy = wave();
  if (copy.apply_pattern(location_, action)) return std::nullopt;
  return copy.tile_availability();
}

std::optional<TileGrid> Environment::level() const {
  if (!wave_ || wave_->dead() || !wave_->fully_collapsed()) return std::nullopt;
  return wave_->decode_tiles();
}

double EpisodeTrace::total_reward() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward;
  return total;
}

EpisodeResult episode_rollout(Policy& policy, Environment& env, std::uint64_t seed) {
  EpisodeResult result;
  result.trace.seed = seed;
  Rng policy_rng(derive_seed(seed, kPolicyStream));

  const ResetResult start = env.reset(seed);
  TraceStep first;
  first.location = start.location;
  first.mask_popcount = popcount(start.mask);
  first.collapsed_count = start.info.collapsed_count;
  first.available_total = start.info.available_total;
  first.gold_reachable = start.info.gold_reachable;
  first.done = start.done;
  result.trace.steps.push_back(first);

  int step = 0;
  while (!env.done()) {
    TraceStep rec;
    rec.step = ++step;
    rec.location = env.location();
    rec.mask_popcount = popcount(env.mask());
    const PatternId action = policy.act(env, policy_rng);
    rec.action = action;
    const StepResult s = env.step(action);
    rec.reward = s.reward;
    rec.collapsed_count = s.info.collapsed_count;
    rec.available_total = s.info.available_total;
    rec.gold_reachable = s.info.gold_reachable;
    rec.contradiction = s.info.contradiction;
    rec.done = s.done;
    result.trace.steps.push_back(rec);
  }
  result.outcome = *env.outcome();
  result.level = env.level();
  return result;
}

std::string trace_to_jsonl(const EpisodeTrace& trace) {
  std::string out;
  for (const TraceStep& s : trace.steps) {
    nlohmann::ordered_json j;
    j["episode_seed"] = trace.seed;
    j["step"] = s.step;
    j["loc"] = {s.location.row, s.location.col};
    j["mask_popcount"] = s.mask_popcount;
    if (s.action) {
      j["action"] = *s.action;
    } else {
      j["action"] = nullptr;
    }
    j["reward"] = s.reward;
    j["collapsed"] = s.collapsed_count;
    j["available"] = s.available_total;
    j["gold_reachable"] = s.gold_reachable;
    j["contradiction"] = s.contradiction;
    j["done"] = s.done;
    out += j.dump();
    out += '\n';
  }
  return out;
}

EpisodeTrace trace_from_jsonl(std::string_view text) {
  EpisodeTrace trace;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    trace.seed = j.at("episode_seed").get<std::uint64_t>();
    TraceStep s;
    s.step = j.at("step").get<int>();
    s.location = {j.at("loc").at(0).get<int>(), j.at("loc").at(1).get<int>()};
    s.mask_popcount = j.at("mask_popcount").get<std::size_t>();
    if (!j.at("action").is_null()) s.action = j.at("action").get<PatternId>();
    s.reward = j.at("reward").get<double>();
    s.collapsed_count = j.at("collapsed").get<std::size_t>();
    s.available_total = j.at("available").get<std::size_t>();
    s.gold_reachable = j.at("gold_reachable").get<int>();
    s.contradiction = j.at("contradiction").get<bool>();
    s.done = j.at("done").get<bool>();
    trace.steps.push_back(s);
  }
  return trace;
}

}  // namespace wcrl
