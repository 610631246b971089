#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "wcrl/env.hpp"

namespace wcrl {

// Vanilla WFC choice: a mask-valid pattern with probability proportional to
// its corpus frequency.
class FrequencyRandomPolicy final : public Policy {
 public:
  PatternId act(const Environment& env, Rng& rng) override;
};

// Uniform over mask-valid patterns. Mostly for soak tests of the env and
// the bridge.
class UniformRandomPolicy final : public Policy {
 public:
  PatternId act(const Environment& env, Rng& rng) override;
};

// Tries every valid pattern on a copy of the environment and keeps the one
// with the largest return over `depth` greedy steps. Ties go to the lowest id.
class GreedyLookaheadPolicy final : public Policy {
 public:
  explicit GreedyLookaheadPolicy(int depth = 1);
  PatternId act(const Environment& env, Rng& rng) override;

 private:
  double best_value(const Environment& env, int depth, PatternId* best) const;
  int depth_;
};

inline constexpr int kParamsFormatVersion = 1;

// theta scores a candidate pattern a as theta . phi(a), where phi(a) is the
// (2k+1) x (2k+1) x 7 availability patch around the target after placing a
// (all zero if a contradicts), followed by a's n*n tiles one-hot over the 7
// observation channels.
struct LinearPolicyParams {
  int k = 4;
  int n = 3;
  int t = kObservationChannels;
  std::vector<double> theta;

  static std::size_t dimension(int k, int n) {
    const auto side = static_cast<std::size_t>(2 * k + 1);
    return side * side * kObservationChannels +
           static_cast<std::size_t>(n) * n * kObservationChannels;
  }
  static LinearPolicyParams zeros(int k, int n);
  std::size_t patch_dimension() const {
    const auto side = static_cast<std::size_t>(2 * k + 1);
    return side * side * kObservationChannels;
  }

  nlohmann::ordered_json to_json() const;
  static LinearPolicyParams from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static LinearPolicyParams load(const std::filesystem::path& path);
};

// Explicit feature vector phi(a) for the current target.
std::vector<double> linear_features(const LinearPolicyParams& params, const Environment& env,
                                    PatternId action);

// Argmax of the score over valid actions; ties go to the lowest id.
PatternId linear_policy_act(const LinearPolicyParams& params, const Environment& env);

class LinearPolicy final : public Policy {
 public:
  explicit LinearPolicy(LinearPolicyParams params) : params_(std::move(params)) {}
  PatternId act(const Environment& env, Rng& rng) override;
  const LinearPolicyParams& params() const { return params_; }

 private:
  LinearPolicyParams params_;
};

struct ESConfig {
  int population = 32;  // even; mirrored pairs
  double sigma = 0.1;
  double alpha = 0.02;
  int generations = 50;
  int episodes_per_eval = 8;
  std::uint64_t seed = 0;
  int k = 4;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct GenerationStats {
  int generation = 0;
  double mean_return = 0.0;
  double max_return = 0.0;
};

struct TrainingResult {
  LinearPolicyParams params;  // final search mean
  LinearPolicyParams best;    // best scoring population member seen
  double best_return = 0.0;
  std::vector<GenerationStats> curve;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mirrored-sampling evolution strategy with centred-rank fitness shaping.
// Every member of a generation is scored on the same episode seeds.
TrainingResult es_train(const Environment& prototype, const ESConfig& es,
                        const std::function<void(const GenerationStats&)>& on_generation = {});

// Mean return of a policy over `episodes` rollouts on copies of prototype.
double mean_return(const Environment& prototype, const std::function<std::unique_ptr<Policy>()>& make,
                   const std::vector<std::uint64_t>& seeds);

// Runs fn(i) for i in [0, count) on up to `threads` workers; results must be
// written by index. Rethrows the first failure.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace wcrl
