#include "wcrl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace wcrl {

PatternDistribution PatternDistribution::of(const TileGrid& grid, int n) {
  if (grid.height() < n || grid.width() < n) {
    throw MetricError("grid is smaller than the " + std::to_string(n) + "x" +
                      std::to_string(n) + " window");
  }
  PatternDistribution d;
  std::string key(static_cast<std::size_t>(n) * n, '.');
  for (int r = 0; r + n <= grid.height(); ++r) {
    for (int c = 0; c + n <= grid.width(); ++c) {
      std::size_t k = 0;
      for (int dr = 0; dr < n; ++dr) {
        for (int dc = 0; dc < n; ++dc) key[k++] = tile_char(grid.at(r + dr, c + dc));
      }
      d.counts[key] += 1.0;
      d.total += 1.0;
    }
  }
  return d;
}

double tp_kldiv(const TileGrid& a, const TileGrid& b, int n, double epsilon) {
  if (!(epsilon > 0.0)) throw MetricError("epsilon must be positive");
  const PatternDistribution pa = PatternDistribution::of(a, n);
  const PatternDistribution pb = PatternDistribution::of(b, n);
  std::set<std::string> support;
  for (const auto& [k, v] : pa.counts) support.insert(k);
  for (const auto& [k, v] : pb.counts) support.insert(k);
  const double norm = 1.0 + epsilon * static_cast<double>(support.size());

  auto prob = [&](const PatternDistribution& d, const std::string& key) {
    const auto it = d.counts.find(key);
    const double p = it == d.counts.end() ? 0.0 : it->second / d.total;
    return (p + epsilon) / norm;
  };
  double kl = 0.0;
  for (const auto& key : support) {
    const double p = prob(pa, key);
    const double q = prob(pb, key);
    kl += p * std::log(p / q);
  }
  // Rounding can leave a tiny negative for identical distributions.
  return kl < 0.0 ? 0.0 : kl;
}

double pairwise_diversity(std::span<const TileGrid> levels, int n, double epsilon) {
  if (levels.size() < 2) throw MetricError("diversity needs at least two levels");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    for (std::size_t j = 0; j < levels.size(); ++j) {
      if (i == j) continue;
      total += tp_kldiv(levels[i], levels[j], n, epsilon);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

BatchReport batch_evaluate(std::span<const EpisodeRecord> episodes, int n, double epsilon) {
  BatchReport report;
  report.episodes = episodes.size();
  if (episodes.empty()) return report;

  std::size_t playable = 0, unplayable = 0, contradiction = 0, any_gold = 0;
  std::vector<TileGrid> playable_levels;
  std::vector<double> collapsed_sum, available_sum, mask_sum;
  std::vector<std::size_t> reached;
  for (const EpisodeRecord& e : episodes) {
    switch (e.outcome) {
      case Outcome::Playable:
        ++playable;
        if (e.level) playable_levels.push_back(*e.level);
        break;
      case Outcome::Unplayable: ++unplayable; break;
      case Outcome::Contradiction: ++contradiction; break;
    }
    if (e.level && analyze(*e.level).any_gold()) ++any_gold;
    for (std::size_t t = 0; t < e.trace.steps.size(); ++t) {
      if (t >= reached.size()) {
        reached.push_back(0);
        collapsed_sum.push_back(0.0);
        available_sum.push_back(0.0);
        mask_sum.push_back(0.0);
      }
      const TraceStep& s = e.trace.steps[t];
      ++reached[t];
      collapsed_sum[t] += static_cast<double>(s.collapsed_count);
      available_sum[t] += static_cast<double>(s.available_total);
      mask_sum[t] += static_cast<double>(s.mask_popcount);
    }
  }
  const double total = static_cast<double>(episodes.size());
  report.playable_rate = static_cast<double>(playable) / total;
  report.unplayable_rate = static_cast<double>(unplayable) / total;
  report.contradiction_rate = static_cast<double>(contradiction) / total;
  report.any_gold_rate = static_cast<double>(any_gold) / total;
  report.playable_levels = playable_levels.size();
  if (playable_levels.size() >= 2) {
    report.diversity = pairwise_diversity(playable_levels, n, epsilon);
  }
  for (std::size_t t = 0; t < reached.size(); ++t) {
    const double k = static_cast<double>(reached[t]);
    report.collapsed_curve.push_back(collapsed_sum[t] / k);
    report.available_curve.push_back(available_sum[t] / k);
    report.mask_curve.push_back(mask_sum[t] / k);
  }
  return report;
}

nlohmann::ordered_json to_json(const BatchReport& r) {
  nlohmann::ordered_json j;
  j["episodes"] = r.episodes;
  j["playable_rate"] = r.playable_rate;
  j["unplayable_rate"] = r.unplayable_rate;
  j["contradiction_rate"] = r.contradiction_rate;
  j["any_gold_rate"] = r.any_gold_rate;
  j["playable_levels"] = r.playable_levels;
  if (r.diversity) {
    j["diversity"] = *r.diversity;
  } else {
    j["diversity"] = nullptr;
  }
  j["collapsed_curve"] = r.collapsed_curve;
  j["available_curve"] = r.available_curve;
  j["mask_curve"] = r.mask_curve;
  return j;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string csv_header() { return "config_id,seed,playable,unplayable,contradiction,diversity\n"; }

std::string csv_row(const std::string& config_id, std::uint64_t seed, const BatchReport& r) {
  return config_id + "," + std::to_string(seed) + "," + fmt(r.playable_rate) + "," +
         fmt(r.unplayable_rate) + "," + fmt(r.contradiction_rate) + "," +
         (r.diversity ? fmt(*r.diversity) : std::string("NA")) + "\n";
}

std::string csv_failed_row(const std::string& config_id, std::uint64_t seed) {
  return config_id + "," + std::to_string(seed) + ",FAILED,FAILED,FAILED,NA\n";
}

std::string curves_to_jsonl(const BatchReport& r) {
  std::string out;
  for (std::size_t t = 0; t < r.collapsed_curve.size(); ++t) {
    nlohmann::ordered_json j;
    j["step"] = t;
    j["collapsed"] = r.collapsed_curve[t];
    j["available"] = r.available_curve[t];
    j["mask"] = r.mask_curve[t];
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace wcrl
