#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "wcrl/patterns.hpp"
#include "wcrl/rng.hpp"
#include "wcrl/tile_grid.hpp"

namespace wcrl {

// A domain emptied during propagation. cell is the lattice cell that ran out
// of patterns; action is the pattern whose application triggered it, if any.
struct Contradiction {
  Coord cell;
  std::optional<PatternId> action;
};

class WaveError : public std::logic_error {
 public:
  enum class Kind { AllCollapsed, InvalidPattern, NotFullyCollapsed, Dead, BadDimensions };
  WaveError(Kind kind, const std::string& what) : std::logic_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Collapse state over the pattern lattice. Lattice cell (r, c) holds the
// patterns that may be anchored with their top-left tile at level tile (r, c).
//
// Domains only ever shrink. A domain is never stored empty: the operation that
// would empty one returns a Contradiction and the wave becomes dead, after
// which every mutating call throws.
class Wave {
 public:
  Wave(std::shared_ptr<const PatternModel> model, int level_height,
       int level_width, std::uint64_t seed);

  const PatternModel& model() const { return *model_; }
  const std::shared_ptr<const PatternModel>& model_ptr() const { return model_; }
  int level_height() const { return level_height_; }
  int level_width() const { return level_width_; }
  int lattice_height() const { return lattice_height_; }
  int lattice_width() const { return lattice_width_; }
  std::size_t cell_count() const { return counts_.size(); }

  bool contains_cell(Coord c) const {
    return c.row >= 0 && c.col >= 0 && c.row < lattice_height_ && c.col < lattice_width_;
  }

  std::span<const bits::Word> domain_bits(Coord c) const {
    return {domains_.data() + index(c) * words_, words_};
  }
  std::vector<PatternId> domain(Coord c) const;
  bool allows(Coord c, PatternId p) const { return bits::test(domain_bits(c), p); }
  std::size_t domain_size(Coord c) const { return counts_[index(c)]; }

  std::size_t collapsed_count() const { return collapsed_; }
  bool fully_collapsed() const { return collapsed_ == counts_.size(); }
  // Sum of domain sizes over the lattice.
  std::size_t total_available() const;

  const std::optional<Contradiction>& contradiction() const { return dead_; }
  bool dead() const { return dead_.has_value(); }

  Rng& rng() { return rng_; }
  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }

  // Enforces arc consistency from every cell. new waves start unpropagated.
  std::optional<Contradiction> propagate_all();

  // Uncollapsed cell with the fewest candidates; ties broken uniformly with the
  // wave's rng.
  Coord next_cell_to_collapse();

  // Collapses cell to p and propagates to the fixpoint.
  std::optional<Contradiction> apply_pattern(Coord cell, PatternId p);

  // Intersects cell's domain with keep (without propagating). Returns the
  // contradiction if the domain would become empty.
  std::optional<Contradiction> restrict_domain(Coord cell, std::span<const bits::Word> keep);

  // Propagates from the cells touched by restrict_domain.
  std::optional<Contradiction> propagate();

  // Reads the level off a fully collapsed wave.
  TileGrid decode_tiles() const;

  // Per tile, the union over covering lattice cells of the symbol each
  // candidate pattern puts there.
  Availability tile_availability() const;

  // Randomises the worklist pop order (the fixpoint must not depend on it).
  void shuffle_worklist(std::uint64_t seed) { worklist_rng_ = Rng(seed); }

  // {"lattice":[h,w],"domains":[[ids...],...]} row-major.
  nlohmann::ordered_json snapshot() const;

 private:
  std::size_t index(Coord c) const {
    return static_cast<std::size_t>(c.row) * lattice_width_ + c.col;
  }
  Coord coord(std::size_t i) const {
    return {static_cast<int>(i / lattice_width_), static_cast<int>(i % lattice_width_)};
  }
  std::span<bits::Word> mutable_domain(std::size_t i) {
    return {domains_.data() + i * words_, words_};
  }
  void require_alive() const;
  void enqueue(std::size_t i);
  void set_count(std::size_t i, std::size_t count);
  std::optional<Contradiction> run_worklist(std::optional<PatternId> action);

  std::shared_ptr<const PatternModel> model_;
  int level_height_ = 0;
  int level_width_ = 0;
  int lattice_height_ = 0;
  int lattice_width_ = 0;
  std::size_t words_ = 0;
  std::vector<bits::Word> domains_;
  std::vector<std::uint32_t> counts_;
  std::size_t collapsed_ = 0;
  Rng rng_;
  std::optional<Contradiction> dead_;

  std::vector<std::size_t> worklist_;
  std::vector<std::uint8_t> queued_;
  std::vector<bits::Word> scratch_;
  std::optional<Rng> worklist_rng_;
};

// Frequency-proportional draw among the candidates in domain.
PatternId weighted_choice(const PatternSet& ps, std::span<const bits::Word> domain, Rng& rng);

struct PlayerPlacement {
  Coord cell;
  PatternId pattern = 0;
  Coord spawn;  // tile coordinates of 'M'
};

// Applies a uniformly random player pattern at a uniformly random lattice
// cell, then removes every pattern that would put an 'M' on any other tile,
// and re-propagates. Draws come from the wave's rng. On contradiction the
// wave is dead and the caller retries on a fresh wave.
std::optional<Contradiction> place_player(Wave& wave, PlayerPlacement* placement = nullptr);

// Collapses up to k more cells the vanilla way (most constrained cell,
// frequency-weighted pattern).
std::optional<Contradiction> random_partial_collapse(Wave& wave, std::size_t k);

}  // namespace wcrl
