#include "wcrl/policies.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace wcrl {

PatternId FrequencyRandomPolicy::act(const Environment& env, Rng& rng) {
  const ActionMask& mask = env.mask();
  const PatternSet& ps = env.model().patterns();
  std::uint64_t total = 0;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask[a]) total += ps.frequency(static_cast<PatternId>(a));
  }
  std::uint64_t ticket = rng.uniform_index(static_cast<std::size_t>(total));
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) continue;
    const auto f = ps.frequency(static_cast<PatternId>(a));
    if (ticket < f) return static_cast<PatternId>(a);
    ticket -= f;
  }
  throw std::logic_error("frequency draw fell off the mask");
}

PatternId UniformRandomPolicy::act(const Environment& env, Rng& rng) {
  const ActionMask& mask = env.mask();
  std::size_t pick = rng.uniform_index(popcount(mask));
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask[a] && pick-- == 0) return static_cast<PatternId>(a);
  }
  throw std::logic_error("uniform draw fell off the mask");
}

GreedyLookaheadPolicy::GreedyLookaheadPolicy(int depth) : depth_(depth) {
  if (depth < 1) throw std::invalid_argument("lookahead depth must be >= 1");
}

double GreedyLookaheadPolicy::best_value(const Environment& env, int depth,
                                         PatternId* best) const {
  double best_v = -std::numeric_limits<double>::infinity();
  const ActionMask& mask = env.mask();
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) continue;
    Environment copy = env;
    const StepResult s = copy.step(static_cast<PatternId>(a));
    double v = s.reward;
    if (depth > 1 && !s.done) v += best_value(copy, depth - 1, nullptr);
    if (v > best_v) {
      best_v = v;
      if (best) *best = static_cast<PatternId>(a);
    }
  }
  return best_v;
}

PatternId GreedyLookaheadPolicy::act(const Environment& env, Rng&) {
  PatternId best = 0;
  best_value(env, depth_, &best);
  return best;
}

LinearPolicyParams LinearPolicyParams::zeros(int k, int n) {
  LinearPolicyParams p;
  p.k = k;
  p.n = n;
  p.theta.assign(dimension(k, n), 0.0);
  return p;
}

nlohmann::ordered_json LinearPolicyParams::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = kParamsFormatVersion;
  j["k"] = k;
  j["n"] = n;
  j["t"] = t;
  j["theta"] = theta;
  return j;
}

LinearPolicyParams LinearPolicyParams::from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != kParamsFormatVersion) {
    throw std::runtime_error("unsupported params format_version");
  }
  LinearPolicyParams p;
  p.k = j.at("k").get<int>();
  p.n = j.at("n").get<int>();
  p.t = j.at("t").get<int>();
  p.theta = j.at("theta").get<std::vector<double>>();
  if (p.t != kObservationChannels || p.k < 0 || p.n < 2 ||
      p.theta.size() != dimension(p.k, p.n)) {
    throw std::runtime_error("params dimensions do not match k, n, t");
  }
  for (double v : p.theta) {
    if (!std::isfinite(v)) throw std::runtime_error("params contain non-finite values");
  }
  return p;
}

void LinearPolicyParams::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << to_json().dump() << '\n';
}

LinearPolicyParams LinearPolicyParams::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  return from_json(nlohmann::json::parse(in));
}

namespace {

void check_params(const LinearPolicyParams& params, const Environment& env) {
  if (params.n != env.model().n() || params.theta.size() != LinearPolicyParams::dimension(params.k, params.n)) {
    throw std::invalid_argument("linear policy params do not match the environment window");
  }
}

// theta . phi(a) accumulated without materialising phi.
double linear_score(const LinearPolicyParams& params, const Environment& env, PatternId action) {
  const int side = 2 * params.k + 1;
  const Coord target = env.location();
  double score = 0.0;
  if (const auto avail = env.preview(action)) {
    for (int i = 0; i < side; ++i) {
      const int r = target.row + i - params.k;
      if (r < 0 || r >= avail->height) continue;
      for (int j = 0; j < side; ++j) {
        const int c = target.col + j - params.k;
        if (c < 0 || c >= avail->width) continue;
        const SymbolSet s = avail->at(r, c);
        const std::size_t base = (static_cast<std::size_t>(i) * side + j) * kObservationChannels;
        SymbolSet channels = 0;
        for (Tile t : kAllTiles) {
          if (s & symbol_bit(t)) channels |= static_cast<SymbolSet>(1u << observation_channel(t));
        }
        for (int ch = 0; ch < kObservationChannels; ++ch) {
          if (channels & (1u << ch)) score += params.theta[base + ch];
        }
      }
    }
  }
  const auto& tiles = env.model().patterns()[action].tiles;
  const std::size_t offset = params.patch_dimension();
  for (std::size_t cell = 0; cell < tiles.size(); ++cell) {
    score += params.theta[offset + cell * kObservationChannels + observation_channel(tiles[cell])];
  }
  return score;
}

}  // namespace

std::vector<double> linear_features(const LinearPolicyParams& params, const Environment& env,
                                    PatternId action) {
  check_params(params, env);
  std::vector<double> phi(LinearPolicyParams::dimension(params.k, params.n), 0.0);
  const int side = 2 * params.k + 1;
  if (const auto avail = env.preview(action)) {
    const Observation obs = make_observation(*avail, env.location());
    // The target sits at (height/2, width/2) of the centred observation.
    const int ci = obs.height / 2;
    const int cj = obs.width / 2;
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        const int oi = ci + i - params.k;
        const int oj = cj + j - params.k;
        if (oi < 0 || oj < 0 || oi >= obs.height || oj >= obs.width) continue;
        for (int ch = 0; ch < kObservationChannels; ++ch) {
          phi[(static_cast<std::size_t>(i) * side + j) * kObservationChannels + ch] =
              obs.at(oi, oj, ch);
        }
      }
    }
  }
  const auto& tiles = env.model().patterns()[action].tiles;
  const std::size_t offset = params.patch_dimension();
  for (std::size_t cell = 0; cell < tiles.size(); ++cell) {
    phi[offset + cell * kObservationChannels + observation_channel(tiles[cell])] = 1.0;
  }
  return phi;
}

PatternId linear_policy_act(const LinearPolicyParams& params, const Environment& env) {
  check_params(params, env);
  const ActionMask& mask = env.mask();
  PatternId best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) continue;
    const double s = linear_score(params, env, static_cast<PatternId>(a));
    if (!any || s > best_score) {
      best = static_cast<PatternId>(a);
      best_score = s;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("empty action mask");
  return best;
}

PatternId LinearPolicy::act(const Environment& env, Rng&) {
  return linear_policy_act(params_, env);
}

}  // namespace wcrl
