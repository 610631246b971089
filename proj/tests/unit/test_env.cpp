#include <doctest.h>

#include "../common.hpp"
#include "../oracles.hpp"
#include "wcrl/env.hpp"
#include "wcrl/policies.hpp"

using namespace wcrl;
using testing_env::config;

namespace {

// Corpus that contradicts often: random rubble with one spawn and the
// permissive overlap rules.
std::vector<TileGrid> rubble(std::uint64_t seed) {
  Rng rng(seed);
  TileGrid g = oracle::random_grid(rng, 8, 8, "..BB#G-");
  g.set(3, 3, Tile::Player);
  return {g};
}

EnvConfig rubble_config() {
  EnvConfig c;
  c.level_height = 8;
  c.level_width = 10;
  c.n = 2;
  c.adjacency = AdjacencyMode::Overlap;
  return c;
}

void check_observation(const Environment& env, const Observation& obs) {
  const Availability a = env.wave().tile_availability();
  REQUIRE(obs.height == 2 * a.height);
  REQUIRE(obs.width == 2 * a.width);
  REQUIRE(obs.channels == 7);
  const Coord t = env.location();
  for (int i = 0; i < obs.height; ++i) {
    for (int j = 0; j < obs.width; ++j) {
      const int r = i - a.height + t.row;
      const int c = j - a.width + t.col;
      const bool inside = r >= 0 && c >= 0 && r < a.height && c < a.width;
      for (int ch = 0; ch < 7; ++ch) {
        int expect = 0;
        if (inside) {
          const SymbolSet s = a.at(r, c);
          expect = (s & (1u << ch)) != 0 || (ch == 0 && (s & symbol_bit(Tile::Player)));
        }
        CHECK(obs.at(i, j, ch) == expect);
      }
    }
  }
}

}  // namespace

TEST_CASE("reset contract") {
  Environment env(config({"classic_01.txt"}));
  const ResetResult a = env.reset(7);
  CHECK(a.observation.height == 22);
  CHECK(a.observation.width == 32);
  CHECK(a.mask.size() == env.action_count());
  CHECK(popcount(a.mask) >= 1);
  CHECK(popcount(a.mask) == env.wave().domain_size(a.location));
  check_observation(env, a.observation);

  const ResetResult b = env.reset(7);
  CHECK(a.observation == b.observation);
  CHECK(a.mask == b.mask);
  CHECK(a.location == b.location);
}

TEST_CASE("without random collapse the reset state is placement plus propagation") {
  const EnvConfig c = config({"classic_01.txt"});
  Environment env(c);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    env.reset(seed);
    Wave manual(env.model_ptr(), c.level_height, c.level_width, 0);
    REQUIRE_FALSE(manual.propagate_all());
    std::uint64_t attempt = 0;
    for (;; ++attempt) {
      Wave w = manual;
      w.reseed(derive_seed(seed, attempt));
      if (!place_player(w)) {
        manual = w;
        break;
      }
    }
    CHECK(manual.collapsed_count() == env.wave().collapsed_count());
    CHECK(manual.snapshot() == env.wave().snapshot());
  }
}

TEST_CASE("mask equals the target domain over many resets") {
  Environment env(config({"classic_01.txt", "ropes_01.txt"}));
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const ResetResult r = env.reset(seed);
    if (r.done) continue;
    const auto domain = env.wave().domain(r.location);
    REQUIRE(popcount(r.mask) == domain.size());
    for (PatternId p : domain) CHECK(r.mask[p] == 1);
    // the target is a most constrained uncollapsed cell
    for (int row = 0; row < env.wave().lattice_height(); ++row) {
      for (int col = 0; col < env.wave().lattice_width(); ++col) {
        const auto s = env.wave().domain_size({row, col});
        if (s > 1) CHECK(s >= domain.size());
      }
    }
  }
}

TEST_CASE("observations along an episode") {
  Environment env(config({"fortress_01.txt"}));
  env.reset(3);
  FrequencyRandomPolicy policy;
  Rng rng(3);
  int steps = 0;
  while (!env.done() && steps < 40) {
    check_observation(env, env.observation());
    // collapsed tiles show exactly one channel
    const Availability a = env.wave().tile_availability();
    const Observation obs = env.observation();
    const Coord t = env.location();
    for (int r = 0; r < a.height; ++r) {
      for (int c = 0; c < a.width; ++c) {
        if (std::popcount(static_cast<unsigned>(a.at(r, c))) != 1) continue;
        int set = 0;
        for (int ch = 0; ch < 7; ++ch) set += obs.at(r - t.row + a.height, c - t.col + a.width, ch);
        CHECK(set == 1);
      }
    }
    env.step(policy.act(env, rng));
    ++steps;
  }
}

TEST_CASE("step errors leave the episode untouched") {
  Environment env(config({"classic_01.txt"}));
  CHECK_THROWS_AS(env.step(0), EnvError);
  env.reset(5);
  const auto snapshot = env.wave().snapshot();
  const ActionMask mask = env.mask();
  const Coord loc = env.location();
  PatternId masked = 0;
  while (mask[masked]) ++masked;
  try {
    env.step(masked);
    FAIL("expected EnvError");
  } catch (const EnvError& e) {
    CHECK(e.kind() == EnvError::Kind::MaskedActionChosen);
  }
  CHECK_THROWS_AS(env.step(static_cast<PatternId>(env.action_count() + 3)), EnvError);
  CHECK(env.wave().snapshot() == snapshot);
  CHECK(env.mask() == mask);
  CHECK(env.location() == loc);

  FrequencyRandomPolicy policy;
  Rng rng(1);
  while (!env.done()) env.step(policy.act(env, rng));
  try {
    env.step(0);
    FAIL("expected EnvError");
  } catch (const EnvError& e) {
    CHECK(e.kind() == EnvError::Kind::EpisodeFinished);
  }
  CHECK(popcount(env.mask()) == 0);
}

TEST_CASE("reward follows the gold delta, bonus and penalty") {
  int contradictions = 0;
  int plus_one = 0;
  int playable = 0;
  for (std::uint64_t corpus = 0; corpus < 40; ++corpus) {
    std::optional<Environment> env;
    try {
      env.emplace(rubble_config(), rubble(corpus));
    } catch (const EnvError&) {
      continue;
    }
    UniformRandomPolicy policy;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      ResetResult r;
      try {
        r = env->reset(seed);
      } catch (const EnvError&) {
        continue;
      }
      Rng rng(seed);
      int gold = r.info.gold_reachable;
      while (!env->done()) {
        const PatternId a = policy.act(*env, rng);
        const auto preview = env->preview(a);
        const StepResult s = env->step(a);
        if (!preview) {
          CHECK(s.info.contradiction);
          CHECK(s.done);
          CHECK(s.reward == -20.0);
          CHECK(env->outcome() == Outcome::Contradiction);
          ++contradictions;
          break;
        }
        const auto report = analyze(*preview);
        CHECK(report.gold_reachable == s.info.gold_reachable);
        double expect = report.gold_reachable - gold;
        if (s.done && report.playable) expect += 10.0;
        CHECK(s.reward == doctest::Approx(expect));
        if (!s.done && s.reward == 1.0) ++plus_one;
        if (s.done && report.playable) ++playable;
        gold = s.info.gold_reachable;
      }
    }
  }
  CHECK(contradictions > 0);
  CHECK(plus_one > 0);
  CHECK(playable > 0);
}

TEST_CASE("rewards telescope over finished episodes") {
  Environment env(config({"classic_01.txt"}));
  FrequencyRandomPolicy policy;
  int from_zero = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const EpisodeResult r = episode_rollout(policy, env, seed);
    if (r.outcome == Outcome::Contradiction) continue;
    const auto& steps = r.trace.steps;
    const int first = steps.front().gold_reachable;
    const int last = steps.back().gold_reachable;
    double gold_terms = 0;
    for (std::size_t i = 1; i < steps.size(); ++i) {
      gold_terms += steps[i].gold_reachable - steps[i - 1].gold_reachable;
    }
    CHECK(gold_terms == last - first);
    const double bonus = r.outcome == Outcome::Playable ? 10.0 : 0.0;
    CHECK(r.trace.total_reward() == doctest::Approx(last - first + bonus));
    if (first == 0 && r.outcome == Outcome::Playable) {
      ++from_zero;
      CHECK(r.trace.total_reward() ==
            doctest::Approx(static_cast<double>(r.level->count(Tile::Gold)) + 10.0));
    }
  }
  CHECK(from_zero > 0);
}

TEST_CASE("rollout bookkeeping") {
  SUBCASE("uniform corpus") {
    TileGrid g(5, 5, Tile::Solid);
    g.set(2, 2, Tile::Player);
    EnvConfig c;
    c.level_height = 5;
    c.level_width = 5;
    Environment env(c, std::vector<TileGrid>{g});
    FrequencyRandomPolicy policy;
    const EpisodeResult r = episode_rollout(policy, env, 1);
    CHECK(r.trace.action_steps() <= env.lattice_cells());
  }
  SUBCASE("traces on the corpus") {
    Environment env(config({"classic_02.txt"}));
    GreedyLookaheadPolicy policy;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const EpisodeResult r = episode_rollout(policy, env, seed);
      CHECK(r.trace.steps.front().step == 0);
      CHECK_FALSE(r.trace.steps.front().action);
      CHECK(r.trace.action_steps() <= env.lattice_cells());
      for (std::size_t i = 1; i < r.trace.steps.size(); ++i) {
        CHECK(r.trace.steps[i].collapsed_count >= r.trace.steps[i - 1].collapsed_count);
        CHECK(r.trace.steps[i].available_total <= r.trace.steps[i - 1].available_total);
        CHECK(r.trace.steps[i].step == static_cast<int>(i));
      }
      CHECK(r.trace.steps.back().done);
      CHECK(r.level.has_value() == (r.outcome != Outcome::Contradiction));
      if (r.level) {
        CHECK(r.level->count(Tile::Player) == 1);
        CHECK((r.outcome == Outcome::Playable) == analyze(*r.level).playable);
      }
    }
  }
}

TEST_CASE("rollouts are reproducible and traces round-trip") {
  Environment env(config({"ropes_02.txt"}));
  FrequencyRandomPolicy policy;
  const EpisodeResult a = episode_rollout(policy, env, 11);
  const EpisodeResult b = episode_rollout(policy, env, 11);
  const std::string text = trace_to_jsonl(a.trace);
  CHECK(text == trace_to_jsonl(b.trace));
  CHECK(a.level == b.level);
  const EpisodeTrace back = trace_from_jsonl(text);
  CHECK(trace_to_jsonl(back) == text);
  CHECK(back.seed == 11);
  CHECK(back.steps.size() == a.trace.steps.size());
}

TEST_CASE("random collapsed starts") {
  EnvConfig c = config({"classic_01.txt"});
  c.random_collapse = true;
  c.random_collapse_max_fraction = 0.3;
  Environment rc(c);
  c.random_collapse = false;
  Environment plain(c);
  std::size_t extra = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto a = rc.reset(seed);
    const auto b = rc.reset(seed);
    CHECK(a.observation == b.observation);
    CHECK(a.location == b.location);
    plain.reset(seed);
    if (rc.wave().collapsed_count() > plain.wave().collapsed_count()) ++extra;
  }
  CHECK(extra > 10);
}

TEST_CASE("environment construction errors") {
  EnvConfig missing = config({"classic_01.txt"});
  missing.inputs.push_back("/nonexistent/level.txt");
  try {
    Environment env(missing);
    FAIL("expected EnvError");
  } catch (const EnvError& e) {
    CHECK(e.kind() == EnvError::Kind::CorpusError);
    CHECK(std::string(e.what()).find("/nonexistent/level.txt") != std::string::npos);
  }

  EnvConfig c;
  c.level_height = 6;
  c.level_width = 6;
  try {
    Environment env(c, std::vector<TileGrid>{TileGrid(5, 5, Tile::Solid)});
    FAIL("expected EnvError");
  } catch (const EnvError& e) {
    CHECK(e.kind() == EnvError::Kind::CorpusError);
  }

  EnvConfig only_m;
  only_m.level_height = 3;
  only_m.level_width = 9;
  Environment env(only_m, std::vector<TileGrid>{oracle::grid_of({"M.M.M.M", ".......", "M.M.M.M", ".......", "M.M.M.M"})});
  try {
    env.reset(0);
    FAIL("expected EnvError");
  } catch (const EnvError& e) {
    CHECK(e.kind() == EnvError::Kind::PlacementFailed);
  }
}

TEST_CASE("shared step budget") {
  Environment env(config({"classic_01.txt"}));
  auto budget = std::make_shared<std::atomic<std::int64_t>>(5);
  env.set_step_budget(budget);
  env.reset(0);
  FrequencyRandomPolicy policy;
  Rng rng(0);
  Environment copy = env;
  for (int i = 0; i < 3; ++i) env.step(policy.act(env, rng));
  for (int i = 0; i < 2; ++i) copy.step(policy.act(copy, rng));
  try {
    env.step(policy.act(env, rng));
    FAIL("expected EnvError");
  } catch (const EnvError& e) {
    CHECK(e.kind() == EnvError::Kind::BudgetExceeded);
  }
}
