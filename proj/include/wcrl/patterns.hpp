#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "wcrl/bits.hpp"
#include "wcrl/tile_grid.hpp"

namespace wcrl {

using PatternId = std::uint32_t;

enum class Direction : std::uint8_t { Up, Down, Left, Right };

inline constexpr std::array<Direction, 4> kDirections = {
    Direction::Up, Direction::Down, Direction::Left, Direction::Right};

constexpr Direction opposite(Direction d) {
  switch (d) {
    case Direction::Up: return Direction::Down;
    case Direction::Down: return Direction::Up;
    case Direction::Left: return Direction::Right;
    case Direction::Right: return Direction::Left;
  }
  return d;
}

// Lattice offset of the neighbour in direction d, as {drow, dcol}.
constexpr Coord direction_offset(Direction d) {
  switch (d) {
    case Direction::Up: return {-1, 0};
    case Direction::Down: return {1, 0};
    case Direction::Left: return {0, -1};
    case Direction::Right: return {0, 1};
  }
  return {0, 0};
}

const char* direction_name(Direction d);

// An n x n window of tiles, row-major. Ids are dense in first-seen order.
struct Pattern {
  PatternId id = 0;
  std::vector<Tile> tiles;

  Tile at(int row, int col, int n) const {
    return tiles[static_cast<std::size_t>(row) * n + col];
  }
  bool contains(Tile t) const;
  std::string key() const;  // tiles as n*n characters
};

class PatternError : public std::runtime_error {
 public:
  enum class Kind { InputTooSmall, EmptyAfterExclusion, NoPlayerPatterns };
  PatternError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class PatternSet {
 public:
  PatternSet() = default;
  explicit PatternSet(int n, int source_count = 0) : n_(n), source_count_(source_count) {}

  int n() const { return n_; }
  int source_count() const { return source_count_; }
  std::size_t size() const { return patterns_.size(); }
  bool empty() const { return patterns_.empty(); }

  const Pattern& operator[](PatternId id) const { return patterns_[id]; }
  const std::vector<Pattern>& patterns() const { return patterns_; }
  std::uint64_t frequency(PatternId id) const { return frequency_[id]; }
  const std::vector<std::uint64_t>& frequencies() const { return frequency_; }

  std::optional<PatternId> find(const std::string& key) const;

  // Adds occurrences of a window; new windows get the next dense id.
  PatternId add(std::vector<Tile> tiles, std::uint64_t occurrences = 1);

 private:
  int n_ = 0;
  int source_count_ = 0;
  std::vector<Pattern> patterns_;
  std::vector<std::uint64_t> frequency_;
  std::unordered_map<std::string, PatternId> index_;
};

enum class AdjacencyMode { Observed, Overlap };

const char* adjacency_mode_name(AdjacencyMode m);
std::optional<AdjacencyMode> parse_adjacency_mode(std::string_view s);

// allowed(p, d) lists the patterns that may sit at offset-1 from p in
// direction d, sorted ascending.
class AdjacencyRules {
 public:
  AdjacencyRules() = default;
  explicit AdjacencyRules(std::size_t pattern_count)
      : pattern_count_(pattern_count), allowed_(pattern_count * 4) {}

  std::size_t pattern_count() const { return pattern_count_; }

  const std::vector<PatternId>& allowed(PatternId p, Direction d) const {
    return allowed_[slot(p, d)];
  }
  bool allows(PatternId p, Direction d, PatternId q) const;

  // Inserts (p, d, q) and its mirror (q, opposite(d), p).
  void allow(PatternId p, Direction d, PatternId q);

  std::size_t rule_count() const;

  bool operator==(const AdjacencyRules&) const = default;

 private:
  std::size_t slot(PatternId p, Direction d) const {
    return static_cast<std::size_t>(p) * 4 + static_cast<std::size_t>(d);
  }
  void insert_sorted(std::size_t slot, PatternId q);

  std::size_t pattern_count_ = 0;
  std::vector<std::vector<PatternId>> allowed_;
};

// All distinct n x n windows anchored at (r, c), 0 <= r <= H-n, 0 <= c <= W-n,
// across every input, with occurrence counts summed over inputs.
PatternSet extract_patterns(std::span<const TileGrid> inputs, int n);

// Drops patterns seen exactly once. With keep_player_patterns, patterns that
// contain the spawn tile survive regardless. Ids are re-densified in order.
PatternSet exclude_rare(const PatternSet& ps, bool keep_player_patterns);

bool overlap_consistent(const Pattern& p, Direction d, const Pattern& q, int n);

// Observed: (p, d, q) iff some input has q anchored one lattice step from p in
// direction d. Overlap: iff the (n-1)-wide overlap agrees. Windows of the
// inputs that are not in ps are ignored.
AdjacencyRules learn_adjacency(const PatternSet& ps,
                               std::span<const TileGrid> inputs,
                               AdjacencyMode mode);

// Ids of patterns containing 'M'; throws NoPlayerPatterns when there are none.
std::vector<PatternId> get_player_patterns(const PatternSet& ps);

// {n, patterns:[{id, tiles, freq}], rules:[{p, dir, allowed}]}, ordered by id
// then direction.
nlohmann::ordered_json pattern_dump(const PatternSet& ps, const AdjacencyRules& rules);

// Bitset form of a pattern set and its rules, shared read-only by every wave
// built from the same corpus.
class PatternModel {
 public:
  PatternModel(PatternSet patterns, AdjacencyRules rules);

  const PatternSet& patterns() const { return patterns_; }
  const AdjacencyRules& rules() const { return rules_; }
  int n() const { return patterns_.n(); }
  std::size_t pattern_count() const { return patterns_.size(); }
  std::size_t words() const { return words_; }

  std::span<const bits::Word> allowed_bits(PatternId p, Direction d) const {
    return {allowed_bits_.data() +
                (static_cast<std::size_t>(p) * 4 + static_cast<std::size_t>(d)) *
                    words_,
            words_};
  }

  // Patterns whose tile at local offset (row * n + col) is t.
  std::span<const bits::Word> tile_bits(int offset, Tile t) const {
    return {tile_bits_.data() +
                (static_cast<std::size_t>(offset) * kTileCount +
                 static_cast<std::size_t>(t)) *
                    words_,
            words_};
  }

  // Patterns containing 'M' anywhere.
  std::span<const bits::Word> player_bits() const { return player_bits_; }

 private:
  PatternSet patterns_;
  AdjacencyRules rules_;
  std::size_t words_ = 0;
  std::vector<bits::Word> allowed_bits_;
  std::vector<bits::Word> tile_bits_;
  std::vector<bits::Word> player_bits_;
};

}  // namespace wcrl
