#pragma once

// Reference implementations used by the unit and acceptance tests. Each one is
// a direct, slow restatement of a rule and shares no code with the library
// beyond the plain data types.

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "wcrl/patterns.hpp"
#include "wcrl/rng.hpp"
#include "wcrl/tile_grid.hpp"
#include "wcrl/wave.hpp"

namespace oracle {

using namespace wcrl;

inline TileGrid grid_of(const std::vector<std::string>& rows) {
  std::string text;
  for (const auto& r : rows) text += r + "\n";
  return parse_level(text);
}

inline TileGrid random_grid(Rng& rng, int h, int w, const std::string& symbols) {
  TileGrid g(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      g.set(r, c, *tile_from_char(symbols[rng.uniform_index(symbols.size())]));
    }
  }
  return g;
}

inline std::string window(const TileGrid& g, int r, int c, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s += tile_char(g.at(r + i, c + j));
  }
  return s;
}

// Window string -> occurrence count, by sliding every anchor.
inline std::map<std::string, std::uint64_t> windows(const std::vector<TileGrid>& grids, int n) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& g : grids) {
    for (int r = 0; r + n <= g.height(); ++r) {
      for (int c = 0; c + n <= g.width(); ++c) ++out[window(g, r, c, n)];
    }
  }
  return out;
}

// (p, direction, q) over window strings: q anchored one step from p in some input.
using Rule = std::tuple<std::string, int, std::string>;
inline std::set<Rule> observed_rules(const std::vector<TileGrid>& grids, int n) {
  // Up, Down, Left, Right
  constexpr int dr[4] = {-1, 1, 0, 0};
  constexpr int dc[4] = {0, 0, -1, 1};
  std::set<Rule> out;
  for (const auto& g : grids) {
    const int lh = g.height() - n + 1;
    const int lw = g.width() - n + 1;
    for (int r = 0; r < lh; ++r) {
      for (int c = 0; c < lw; ++c) {
        for (int d = 0; d < 4; ++d) {
          const int r2 = r + dr[d];
          const int c2 = c + dc[d];
          if (r2 < 0 || c2 < 0 || r2 >= lh || c2 >= lw) continue;
          out.insert({window(g, r, c, n), d, window(g, r2, c2, n)});
        }
      }
    }
  }
  return out;
}

// Explicit successor relation of the movement rules over per-tile symbol sets.
struct Mover {
  const Availability& a;

  bool may(int r, int c, char ch) const { return (a.at(r, c) & symbol_bit(*tile_from_char(ch))) != 0; }
  bool in(int r, int c) const { return r >= 0 && c >= 0 && r < a.height && c < a.width; }
  bool open(int r, int c) const {
    if (!in(r, c)) return false;
    for (char ch : std::string(".#-GEM")) {
      if (may(r, c, ch)) return true;
    }
    return false;
  }
  bool floor_below(int r, int c) const {
    if (r == a.height - 1) return true;
    return may(r + 1, c, 'b') || may(r + 1, c, 'B') || may(r + 1, c, '#');
  }

  std::vector<std::pair<int, int>> next(int r, int c) const {
    const bool grip = may(r, c, '#') || may(r, c, '-');
    if (!grip && !floor_below(r, c)) return {{r + 1, c}};
    std::vector<std::pair<int, int>> out;
    for (const auto& [nr, nc] : {std::pair{r, c - 1}, std::pair{r, c + 1}}) {
      if (open(nr, nc)) out.push_back({nr, nc});
    }
    if (may(r, c, '#') && open(r - 1, c)) out.push_back({r - 1, c});
    if (open(r + 1, c)) out.push_back({r + 1, c});
    return out;
  }
};

struct Reach {
  std::set<std::pair<int, int>> cells;
  int gold_total = 0;
  int gold_reachable = 0;
  bool has_spawn = false;
};

inline Reach reach(const Availability& a) {
  Reach out;
  const SymbolSet only_m = symbol_bit(Tile::Player);
  const SymbolSet only_g = symbol_bit(Tile::Gold);
  std::vector<std::pair<int, int>> spawns;
  for (int r = 0; r < a.height; ++r) {
    for (int c = 0; c < a.width; ++c) {
      if (a.at(r, c) == only_m) spawns.push_back({r, c});
      if (a.at(r, c) == only_g) ++out.gold_total;
    }
  }
  if (spawns.size() != 1) return out;
  out.has_spawn = true;
  Mover m{a};
  std::deque<std::pair<int, int>> queue{spawns[0]};
  out.cells.insert(spawns[0]);
  while (!queue.empty()) {
    const auto [r, c] = queue.front();
    queue.pop_front();
    for (const auto& s : m.next(r, c)) {
      if (out.cells.insert(s).second) queue.push_back(s);
    }
  }
  for (const auto& [r, c] : out.cells) {
    if (a.at(r, c) == only_g) ++out.gold_reachable;
  }
  return out;
}

inline Reach reach(const TileGrid& g) { return reach(Availability::from_grid(g)); }

// Every candidate has a supporting candidate in every in-lattice neighbour,
// checked with the list form of the rules.
inline bool arc_consistent(const Wave& w) {
  const AdjacencyRules& rules = w.model().rules();
  for (int r = 0; r < w.lattice_height(); ++r) {
    for (int c = 0; c < w.lattice_width(); ++c) {
      for (PatternId p : w.domain({r, c})) {
        for (Direction d : kDirections) {
          const Coord o = direction_offset(d);
          const Coord v{r + o.row, c + o.col};
          if (!w.contains_cell(v)) continue;
          bool ok = false;
          for (PatternId q : w.domain(v)) ok = ok || rules.allows(p, d, q);
          if (!ok) return false;
        }
      }
    }
  }
  return true;
}

// Exact per-cell survivors on a small lattice: a pattern survives in a cell iff
// some full assignment satisfying every rule and every fixed cell (index ->
// pattern) uses it there. Rows are enumerated as whole assignments and joined
// by a forward/backward pass. All sets are empty when no assignment exists.
inline std::vector<std::set<PatternId>> surviving(const AdjacencyRules& rules, std::size_t patterns,
                                                  int lh, int lw,
                                                  const std::map<int, PatternId>& fixed) {
  using Row = std::vector<PatternId>;
  std::vector<std::vector<Row>> rows(static_cast<std::size_t>(lh));
  for (int r = 0; r < lh; ++r) {
    Row cur(static_cast<std::size_t>(lw));
    std::function<void(int)> fill = [&](int c) {
      if (c == lw) {
        rows[static_cast<std::size_t>(r)].push_back(cur);
        return;
      }
      for (PatternId p = 0; p < patterns; ++p) {
        if (auto f = fixed.find(r * lw + c); f != fixed.end() && f->second != p) continue;
        if (c > 0 && !rules.allows(cur[static_cast<std::size_t>(c - 1)], Direction::Right, p)) continue;
        cur[static_cast<std::size_t>(c)] = p;
        fill(c + 1);
      }
    };
    fill(0);
  }
  auto stack_ok = [&](const Row& above, const Row& below) {
    for (std::size_t c = 0; c < above.size(); ++c) {
      if (!rules.allows(above[c], Direction::Down, below[c])) return false;
    }
    return true;
  };
  std::vector<std::vector<char>> fwd(static_cast<std::size_t>(lh)), bwd(static_cast<std::size_t>(lh));
  for (int r = 0; r < lh; ++r) {
    const auto& rs = rows[static_cast<std::size_t>(r)];
    auto& f = fwd[static_cast<std::size_t>(r)];
    f.assign(rs.size(), r == 0);
    if (r == 0) continue;
    const auto& prev = rows[static_cast<std::size_t>(r - 1)];
    for (std::size_t i = 0; i < rs.size(); ++i) {
      for (std::size_t j = 0; j < prev.size() && !f[i]; ++j) {
        f[i] = fwd[static_cast<std::size_t>(r - 1)][j] && stack_ok(prev[j], rs[i]);
      }
    }
  }
  for (int r = lh - 1; r >= 0; --r) {
    const auto& rs = rows[static_cast<std::size_t>(r)];
    auto& b = bwd[static_cast<std::size_t>(r)];
    b.assign(rs.size(), r == lh - 1);
    if (r == lh - 1) continue;
    const auto& next = rows[static_cast<std::size_t>(r + 1)];
    for (std::size_t i = 0; i < rs.size(); ++i) {
      for (std::size_t j = 0; j < next.size() && !b[i]; ++j) {
        b[i] = bwd[static_cast<std::size_t>(r + 1)][j] && stack_ok(rs[i], next[j]);
      }
    }
  }
  std::vector<std::set<PatternId>> out(static_cast<std::size_t>(lh * lw));
  for (int r = 0; r < lh; ++r) {
    const auto& rs = rows[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < rs.size(); ++i) {
      if (!fwd[static_cast<std::size_t>(r)][i] || !bwd[static_cast<std::size_t>(r)][i]) continue;
      for (int c = 0; c < lw; ++c) {
        out[static_cast<std::size_t>(r * lw + c)].insert(rs[i][static_cast<std::size_t>(c)]);
      }
    }
  }
  return out;
}

// Random symmetric rule set over `patterns` ids; each ordered pair and
// direction allowed with probability density.
inline AdjacencyRules random_rules(Rng& rng, std::size_t patterns, double density) {
  AdjacencyRules rules(patterns);
  for (PatternId p = 0; p < patterns; ++p) {
    for (PatternId q = 0; q < patterns; ++q) {
      if (rng.uniform01() < density) rules.allow(p, Direction::Right, q);
      if (rng.uniform01() < density) rules.allow(p, Direction::Down, q);
    }
  }
  return rules;
}

// Pattern set of `count` distinct n x n patterns over "." and "B" with
// frequency 1; the tiles carry no meaning when the rules are random.
inline PatternSet dummy_patterns(std::size_t count, int n) {
  PatternSet ps(n, 1);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<Tile> tiles(static_cast<std::size_t>(n) * n, Tile::Empty);
    for (std::size_t b = 0; b < tiles.size() && b < 32; ++b) {
      if ((i >> b) & 1) tiles[b] = Tile::Solid;
    }
    ps.add(std::move(tiles));
  }
  return ps;
}

}  // namespace oracle
