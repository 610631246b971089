#include "wcrl/playability.hpp"

#include <algorithm>

namespace wcrl {

namespace {

constexpr SymbolSet kSolid = symbol_bit(Tile::Brick) | symbol_bit(Tile::Solid);
constexpr SymbolSet kSupportBelow = kSolid | symbol_bit(Tile::Ladder);
constexpr SymbolSet kHold = symbol_bit(Tile::Ladder) | symbol_bit(Tile::Rope);
constexpr SymbolSet kLadder = symbol_bit(Tile::Ladder);

class Movement {
 public:
  explicit Movement(const Availability& level) : level_(level) {}

  bool inside(int r, int c) const {
    return r >= 0 && c >= 0 && r < level_.height && c < level_.width;
  }
  bool passable(int r, int c) const { return inside(r, c) && (level_.at(r, c) & ~kSolid) != 0; }

  bool supported(int r, int c) const {
    if (level_.at(r, c) & kHold) return true;
    if (r + 1 >= level_.height) return true;
    return (level_.at(r + 1, c) & kSupportBelow) != 0;
  }

  template <typename Visit>
  void successors(int r, int c, Visit&& visit) const {
    if (!supported(r, c)) {
      visit(r + 1, c);
      return;
    }
    if (passable(r, c - 1)) visit(r, c - 1);
    if (passable(r, c + 1)) visit(r, c + 1);
    if ((level_.at(r, c) & kLadder) && passable(r - 1, c)) visit(r - 1, c);
    if (passable(r + 1, c)) visit(r + 1, c);
  }

 private:
  const Availability& level_;
};

}  // namespace

std::size_t ReachabilityReport::reachable_count() const {
  return static_cast<std::size_t>(std::count(reachable.begin(), reachable.end(), 1));
}

ReachabilityReport analyze(const Availability& level) {
  ReachabilityReport report;
  report.height = level.height;
  report.width = level.width;
  report.reachable.assign(level.cells.size(), 0);

  constexpr SymbolSet kGold = symbol_bit(Tile::Gold);
  constexpr SymbolSet kPlayer = symbol_bit(Tile::Player);
  int spawns = 0;
  for (int r = 0; r < level.height; ++r) {
    for (int c = 0; c < level.width; ++c) {
      const SymbolSet s = level.at(r, c);
      if (s == kGold) ++report.gold_total;
      if (s == kPlayer) {
        if (spawns++ == 0) report.spawn = Coord{r, c};
      }
    }
  }
  if (spawns == 0) {
    report.spawn_issue = SpawnIssue::NoSpawn;
    return report;
  }
  if (spawns > 1) {
    report.spawn_issue = SpawnIssue::MultipleSpawns;
    report.spawn.reset();
    return report;
  }

  const Movement moves(level);
  std::vector<std::size_t> worklist;
  auto mark = [&](int r, int c) {
    const std::size_t i = static_cast<std::size_t>(r) * level.width + c;
    if (report.reachable[i]) return;
    report.reachable[i] = 1;
    if (level.cells[i] == kGold) ++report.gold_reachable;
    worklist.push_back(i);
  };
  mark(report.spawn->row, report.spawn->col);
  while (!worklist.empty()) {
    const std::size_t i = worklist.back();
    worklist.pop_back();
    ++report.expansions;
    const int r = static_cast<int>(i / level.width);
    const int c = static_cast<int>(i % level.width);
    moves.successors(r, c, [&](int nr, int nc) { mark(nr, nc); });
  }
  report.playable = report.all_gold();
  return report;
}

ReachabilityReport analyze(const TileGrid& grid) {
  return analyze(Availability::from_grid(grid));
}

int count_reachable_gold(const TileGrid& grid) { return analyze(grid).gold_reachable; }

nlohmann::ordered_json to_json(const ReachabilityReport& report) {
  nlohmann::ordered_json out;
  out["height"] = report.height;
  out["width"] = report.width;
  if (report.spawn) {
    out["spawn"] = {report.spawn->row, report.spawn->col};
  } else {
    out["spawn"] = nullptr;
  }
  switch (report.spawn_issue) {
    case SpawnIssue::None: out["spawn_issue"] = nullptr; break;
    case SpawnIssue::NoSpawn: out["spawn_issue"] = "no_spawn"; break;
    case SpawnIssue::MultipleSpawns: out["spawn_issue"] = "multiple_spawns"; break;
  }
  out["gold_total"] = report.gold_total;
  out["gold_reachable"] = report.gold_reachable;
  out["reachable_cells"] = report.reachable_count();
  out["playable"] = report.playable;
  out["any_gold_reachable"] = report.any_gold();
  return out;
}

}  // namespace wcrl
