#include "wcrl/patterns.hpp"

#include <algorithm>

namespace wcrl {

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
  }
  return "?";
}

bool Pattern::contains(Tile t) const {
  return std::find(tiles.begin(), tiles.end(), t) != tiles.end();
}

std::string Pattern::key() const {
  std::string k;
  k.reserve(tiles.size());
  for (Tile t : tiles) k.push_back(tile_char(t));
  return k;
}

std::optional<PatternId> PatternSet::find(const std::string& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

PatternId PatternSet::add(std::vector<Tile> tiles, std::uint64_t occurrences) {
  Pattern p{static_cast<PatternId>(patterns_.size()), std::move(tiles)};
  const std::string key = p.key();
  if (const auto it = index_.find(key); it != index_.end()) {
    frequency_[it->second] += occurrences;
    return it->second;
  }
  index_.emplace(key, p.id);
  patterns_.push_back(std::move(p));
  frequency_.push_back(occurrences);
  return patterns_.back().id;
}

const char* adjacency_mode_name(AdjacencyMode m) {
  return m == AdjacencyMode::Observed ? "observed" : "overlap";
}

std::optional<AdjacencyMode> parse_adjacency_mode(std::string_view s) {
  if (s == "observed") return AdjacencyMode::Observed;
  if (s == "overlap") return AdjacencyMode::Overlap;
  return std::nullopt;
}

bool AdjacencyRules::allows(PatternId p, Direction d, PatternId q) const {
  const auto& v = allowed_[slot(p, d)];
  return std::binary_search(v.begin(), v.end(), q);
}

void AdjacencyRules::insert_sorted(std::size_t s, PatternId q) {
  auto& v = allowed_[s];
  const auto it = std::lower_bound(v.begin(), v.end(), q);
  if (it == v.end() || *it != q) v.insert(it, q);
}

void AdjacencyRules::allow(PatternId p, Direction d, PatternId q) {
  insert_sorted(slot(p, d), q);
  insert_sorted(slot(q, opposite(d)), p);
}

std::size_t AdjacencyRules::rule_count() const {
  std::size_t n = 0;
  for (const auto& v : allowed_) n += v.size();
  return n;
}

namespace {

std::vector<Tile> window(const TileGrid& g, int r0, int c0, int n) {
  std::vector<Tile> tiles;
  tiles.reserve(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) tiles.push_back(g.at(r0 + r, c0 + c));
  }
  return tiles;
}

std::string window_key(const TileGrid& g, int r0, int c0, int n) {
  std::string k;
  k.reserve(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) k.push_back(tile_char(g.at(r0 + r, c0 + c)));
  }
  return k;
}

void check_size(const TileGrid& g, int n) {
  if (g.height() < n || g.width() < n) {
    throw PatternError(PatternError::Kind::InputTooSmall,
                       "input " + std::to_string(g.height()) + "x" +
                           std::to_string(g.width()) + " is smaller than the " +
                           std::to_string(n) + "x" + std::to_string(n) + " window");
  }
}

}  // namespace

PatternSet extract_patterns(std::span<const TileGrid> inputs, int n) {
  if (n < 2) throw std::invalid_argument("window size must be >= 2");
  if (inputs.empty()) {
    throw PatternError(PatternError::Kind::InputTooSmall, "no input levels");
  }
  PatternSet ps(n, static_cast<int>(inputs.size()));
  for (const TileGrid& g : inputs) {
    check_size(g, n);
    for (int r = 0; r + n <= g.height(); ++r) {
      for (int c = 0; c + n <= g.width(); ++c) ps.add(window(g, r, c, n));
    }
  }
  return ps;
}

PatternSet exclude_rare(const PatternSet& ps, bool keep_player_patterns) {
  PatternSet out(ps.n(), ps.source_count());
  for (const Pattern& p : ps.patterns()) {
    const auto freq = ps.frequency(p.id);
    if (freq > 1 || (keep_player_patterns && p.contains(Tile::Player))) {
      out.add(p.tiles, freq);
    }
  }
  if (out.empty()) {
    throw PatternError(PatternError::Kind::EmptyAfterExclusion,
                       "every pattern occurs only once");
  }
  return out;
}

bool overlap_consistent(const Pattern& p, Direction d, const Pattern& q, int n) {
  const Coord off = direction_offset(d);
  // q sits at (off.row, off.col) relative to p; compare the shared cells.
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int qr = r - off.row;
      const int qc = c - off.col;
      if (qr < 0 || qc < 0 || qr >= n || qc >= n) continue;
      if (p.at(r, c, n) != q.at(qr, qc, n)) return false;
    }
  }
  return true;
}

AdjacencyRules learn_adjacency(const PatternSet& ps,
                               std::span<const TileGrid> inputs,
                               AdjacencyMode mode) {
  const int n = ps.n();
  AdjacencyRules rules(ps.size());
  if (mode == AdjacencyMode::Overlap) {
    for (const Pattern& p : ps.patterns()) {
      for (const Pattern& q : ps.patterns()) {
        if (overlap_consistent(p, Direction::Right, q, n)) {
          rules.allow(p.id, Direction::Right, q.id);
        }
        if (overlap_consistent(p, Direction::Down, q, n)) {
          rules.allow(p.id, Direction::Down, q.id);
        }
      }
    }
    return rules;
  }

  constexpr std::int64_t kMissing = -1;
  for (const TileGrid& g : inputs) {
    check_size(g, n);
    const int lh = g.height() - n + 1;
    const int lw = g.width() - n + 1;
    std::vector<std::int64_t> ids(static_cast<std::size_t>(lh) * lw, kMissing);
    for (int r = 0; r < lh; ++r) {
      for (int c = 0; c < lw; ++c) {
        if (const auto id = ps.find(window_key(g, r, c, n))) {
          ids[static_cast<std::size_t>(r) * lw + c] = *id;
        }
      }
    }
    auto id_at = [&](int r, int c) { return ids[static_cast<std::size_t>(r) * lw + c]; };
    for (int r = 0; r < lh; ++r) {
      for (int c = 0; c < lw; ++c) {
        const auto p = id_at(r, c);
        if (p == kMissing) continue;
        if (c + 1 < lw && id_at(r, c + 1) != kMissing) {
          rules.allow(static_cast<PatternId>(p), Direction::Right,
                      static_cast<PatternId>(id_at(r, c + 1)));
        }
        if (r + 1 < lh && id_at(r + 1, c) != kMissing) {
          rules.allow(static_cast<PatternId>(p), Direction::Down,
                      static_cast<PatternId>(id_at(r + 1, c)));
        }
      }
    }
  }
  return rules;
}

std::vector<PatternId> get_player_patterns(const PatternSet& ps) {
  std::vector<PatternId> ids;
  for (const Pattern& p : ps.patterns()) {
    if (p.contains(Tile::Player)) ids.push_back(p.id);
  }
  if (ids.empty()) {
    throw PatternError(PatternError::Kind::NoPlayerPatterns,
                       "no pattern contains a player spawn");
  }
  return ids;
}

nlohmann::ordered_json pattern_dump(const PatternSet& ps, const AdjacencyRules& rules) {
  nlohmann::ordered_json out;
  out["n"] = ps.n();
  auto patterns = nlohmann::ordered_json::array();
  for (const Pattern& p : ps.patterns()) {
    nlohmann::ordered_json entry;
    entry["id"] = p.id;
    entry["tiles"] = p.key();
    entry["freq"] = ps.frequency(p.id);
    patterns.push_back(std::move(entry));
  }
  out["patterns"] = std::move(patterns);
  auto rule_list = nlohmann::ordered_json::array();
  for (const Pattern& p : ps.patterns()) {
    for (Direction d : kDirections) {
      nlohmann::ordered_json entry;
      entry["p"] = p.id;
      entry["dir"] = direction_name(d);
      entry["allowed"] = rules.allowed(p.id, d);
      rule_list.push_back(std::move(entry));
    }
  }
  out["rules"] = std::move(rule_list);
  return out;
}

PatternModel::PatternModel(PatternSet patterns, AdjacencyRules rules)
    : patterns_(std::move(patterns)), rules_(std::move(rules)) {
  if (rules_.pattern_count() != patterns_.size()) {
    throw std::invalid_argument("rules do not match the pattern set");
  }
  const std::size_t count = patterns_.size();
  const int n = patterns_.n();
  words_ = bits::words_for(count);
  allowed_bits_.assign(count * 4 * words_, 0);
  tile_bits_.assign(static_cast<std::size_t>(n) * n * kTileCount * words_, 0);
  player_bits_.assign(words_, 0);

  for (const Pattern& p : patterns_.patterns()) {
    for (Direction d : kDirections) {
      std::span<bits::Word> dst{
          allowed_bits_.data() +
              (static_cast<std::size_t>(p.id) * 4 + static_cast<std::size_t>(d)) * words_,
          words_};
      for (PatternId q : rules_.allowed(p.id, d)) bits::set(dst, q);
    }
    for (int off = 0; off < n * n; ++off) {
      const Tile t = p.tiles[static_cast<std::size_t>(off)];
      std::span<bits::Word> dst{
          tile_bits_.data() + (static_cast<std::size_t>(off) * kTileCount +
                               static_cast<std::size_t>(t)) *
                                  words_,
          words_};
      bits::set(dst, p.id);
    }
    if (p.contains(Tile::Player)) bits::set(player_bits_, p.id);
  }
}

}  // namespace wcrl
