#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "wcrl/policies.hpp"

namespace wcrl {

void ESConfig::validate() const {
  if (population < 2 || population % 2 != 0) {
    throw std::invalid_argument("population must be even and >= 2");
  }
  if (!(sigma >= 0.0) || !(alpha > 0.0) || !std::isfinite(sigma) || !std::isfinite(alpha)) {
    throw std::invalid_argument("sigma must be >= 0 and alpha > 0");
  }
  if (generations < 0 || episodes_per_eval < 1 || k < 0) {
    throw std::invalid_argument("generations >= 0, episodes_per_eval >= 1, k >= 0");
  }
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double mean_return(const Environment& prototype,
                   const std::function<std::unique_ptr<Policy>()>& make,
                   const std::vector<std::uint64_t>& seeds) {
  double total = 0.0;
  for (std::uint64_t seed : seeds) {
    Environment env = prototype;
    auto policy = make();
    total += episode_rollout(*policy, env, seed).trace.total_reward();
  }
  return seeds.empty() ? 0.0 : total / static_cast<double>(seeds.size());
}

namespace {

// Centred ranks in [-0.5, 0.5]; equal fitness ranks by index.
std::vector<double> centred_ranks(const std::vector<double>& fitness) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
  std::vector<double> u(fitness.size(), 0.0);
  if (fitness.size() < 2) return u;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    u[order[rank]] = static_cast<double>(rank) / static_cast<double>(fitness.size() - 1) - 0.5;
  }
  return u;
}

}  // namespace

TrainingResult es_train(const Environment& prototype, const ESConfig& es,
                        const std::function<void(const GenerationStats&)>& on_generation) {
  es.validate();
  const int n = prototype.model().n();
  const std::size_t dim = LinearPolicyParams::dimension(es.k, n);
  const std::size_t pairs = static_cast<std::size_t>(es.population / 2);

  TrainingResult result;
  result.params = LinearPolicyParams::zeros(es.k, n);
  result.best = result.params;
  result.best_return = -std::numeric_limits<double>::infinity();

  Rng noise_rng(derive_seed(es.seed, 0x6e6f697365));
  for (int g = 0; g < es.generations; ++g) {
    std::vector<std::vector<double>> eps(pairs, std::vector<double>(dim));
    for (auto& e : eps) {
      for (double& x : e) x = noise_rng.normal();
    }
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(es.episodes_per_eval));
    for (std::size_t e = 0; e < seeds.size(); ++e) {
      seeds[e] = derive_seed(es.seed, static_cast<std::uint64_t>(g), e);
    }

    // Member 2i is theta + sigma eps_i, member 2i+1 is theta - sigma eps_i.
    const std::vector<double>& theta = result.params.theta;
    auto member_params = [&](std::size_t m) {
      LinearPolicyParams p = result.params;
      const double sign = m % 2 == 0 ? 1.0 : -1.0;
      const auto& e = eps[m / 2];
      for (std::size_t d = 0; d < dim; ++d) p.theta[d] = theta[d] + sign * es.sigma * e[d];
      return p;
    };
    std::vector<double> fitness(static_cast<std::size_t>(es.population), 0.0);
    parallel_for(fitness.size(), es.threads, [&](std::size_t m) {
      const LinearPolicyParams p = member_params(m);
      fitness[m] = mean_return(
          prototype, [&] { return std::make_unique<LinearPolicy>(p); }, seeds);
    });

    GenerationStats stats;
    stats.generation = g;
    stats.mean_return =
        std::accumulate(fitness.begin(), fitness.end(), 0.0) / static_cast<double>(fitness.size());
    const auto best_it = std::max_element(fitness.begin(), fitness.end());
    stats.max_return = *best_it;
    if (*best_it > result.best_return) {
      result.best_return = *best_it;
      result.best = member_params(static_cast<std::size_t>(best_it - fitness.begin()));
    }
    result.curve.push_back(stats);
    if (on_generation) on_generation(stats);

    if (es.sigma > 0.0) {
      const std::vector<double> u = centred_ranks(fitness);
      const double scale = es.alpha / (static_cast<double>(es.population) * es.sigma);
      std::vector<double> next = theta;
      for (std::size_t i = 0; i < pairs; ++i) {
        const double w = (u[2 * i] - u[2 * i + 1]) * scale;
        if (w == 0.0) continue;
        for (std::size_t d = 0; d < dim; ++d) next[d] += w * eps[i][d];
      }
      for (double v : next) {
        if (!std::isfinite(v)) throw TrainingError("ES parameters diverged");
      }
      result.params.theta = std::move(next);
    }
  }
  return result;
}

}  // namespace wcrl
