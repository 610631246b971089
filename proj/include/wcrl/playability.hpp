#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "wcrl/tile_grid.hpp"

namespace wcrl {

enum class SpawnIssue { None, NoSpawn, MultipleSpawns };

struct ReachabilityReport {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> reachable;  // row-major, 1 = reachable
  int gold_total = 0;
  int gold_reachable = 0;
  bool playable = false;
  std::optional<Coord> spawn;
  SpawnIssue spawn_issue = SpawnIssue::None;
  std::size_t expansions = 0;  // cells popped from the worklist

  bool is_reachable(int row, int col) const {
    return reachable[static_cast<std::size_t>(row) * width + col] != 0;
  }
  std::size_t reachable_count() const;
  // All gold reachable and at least one gold exists.
  bool all_gold() const { return gold_total >= 1 && gold_reachable == gold_total; }
  // Looser reading: any gold reachable.
  bool any_gold() const { return gold_reachable >= 1; }
};

// Flood fill from the spawn under simplified Lode Runner movement: bricks of
// both kinds are solid (no digging), enemies are ignored, the row below the
// grid is solid floor, and an unsupported runner can only fall.
//
// On a partially collapsed level each tile holds a set of possible symbols and
// the analysis is optimistic: a tile is passable if any candidate is passable,
// supported if any candidate interpretation supports. Only tiles that are
// certainly gold ({G}) are counted, and the spawn is the unique {M} tile.
ReachabilityReport analyze(const Availability& level);
ReachabilityReport analyze(const TileGrid& grid);

// Gold reachable from the spawn; 0 when the spawn is missing or ambiguous.
int count_reachable_gold(const TileGrid& grid);

nlohmann::ordered_json to_json(const ReachabilityReport& report);

}  // namespace wcrl
