#include "wcrl/wave.hpp"

#include <algorithm>
#include <string>

namespace wcrl {

Wave::Wave(std::shared_ptr<const PatternModel> model, int level_height,
           int level_width, std::uint64_t seed)
    : model_(std::move(model)),
      level_height_(level_height),
      level_width_(level_width),
      rng_(seed) {
  if (!model_ || model_->pattern_count() == 0) {
    throw WaveError(WaveError::Kind::BadDimensions, "wave needs a non-empty pattern model");
  }
  const int n = model_->n();
  if (level_height < n || level_width < n) {
    throw WaveError(WaveError::Kind::BadDimensions,
                    "level " + std::to_string(level_height) + "x" +
                        std::to_string(level_width) + " is smaller than the window");
  }
  lattice_height_ = level_height - n + 1;
  lattice_width_ = level_width - n + 1;
  words_ = model_->words();
  const std::size_t cells = static_cast<std::size_t>(lattice_height_) * lattice_width_;
  const std::size_t count = model_->pattern_count();

  std::vector<bits::Word> full(words_, ~bits::Word{0});
  if (count % 64 != 0) full.back() = (bits::Word{1} << (count % 64)) - 1;
  domains_.reserve(cells * words_);
  for (std::size_t i = 0; i < cells; ++i) {
    domains_.insert(domains_.end(), full.begin(), full.end());
  }
  counts_.assign(cells, static_cast<std::uint32_t>(count));
  collapsed_ = count == 1 ? cells : 0;
  queued_.assign(cells, 0);
  scratch_.assign(words_, 0);
}

std::vector<PatternId> Wave::domain(Coord c) const {
  std::vector<PatternId> ids;
  ids.reserve(domain_size(c));
  bits::for_each(domain_bits(c), [&](std::size_t p) { ids.push_back(static_cast<PatternId>(p)); });
  return ids;
}

std::size_t Wave::total_available() const {
  std::size_t total = 0;
  for (auto c : counts_) total += c;
  return total;
}

void Wave::require_alive() const {
  if (dead_) throw WaveError(WaveError::Kind::Dead, "wave is in a contradiction state");
}

void Wave::enqueue(std::size_t i) {
  if (!queued_[i]) {
    queued_[i] = 1;
    worklist_.push_back(i);
  }
}

void Wave::set_count(std::size_t i, std::size_t count) {
  const bool was = counts_[i] == 1;
  const bool now = count == 1;
  counts_[i] = static_cast<std::uint32_t>(count);
  if (was && !now) --collapsed_;
  if (!was && now) ++collapsed_;
}

std::optional<Contradiction> Wave::run_worklist(std::optional<PatternId> action) {
  const PatternModel& model = *model_;
  while (!worklist_.empty()) {
    std::size_t pick = worklist_.size() - 1;
    if (worklist_rng_) pick = worklist_rng_->uniform_index(worklist_.size());
    const std::size_t i = worklist_[pick];
    worklist_[pick] = worklist_.back();
    worklist_.pop_back();
    queued_[i] = 0;

    const Coord here = coord(i);
    const auto source = std::span<const bits::Word>(domains_.data() + i * words_, words_);
    for (Direction d : kDirections) {
      const Coord off = direction_offset(d);
      const Coord there{here.row + off.row, here.col + off.col};
      if (!contains_cell(there)) continue;

      std::fill(scratch_.begin(), scratch_.end(), 0);
      bits::for_each(source, [&](std::size_t p) {
        const auto allowed = model.allowed_bits(static_cast<PatternId>(p), d);
        for (std::size_t w = 0; w < words_; ++w) scratch_[w] |= allowed[w];
      });

      const std::size_t j = index(there);
      auto target = mutable_domain(j);
      bool changed = false;
      std::size_t remaining = 0;
      for (std::size_t w = 0; w < words_; ++w) {
        const bits::Word next = target[w] & scratch_[w];
        changed |= next != target[w];
        remaining += static_cast<std::size_t>(std::popcount(next));
      }
      if (!changed) continue;
      if (remaining == 0) {
        dead_ = Contradiction{there, action};
        for (std::size_t k : worklist_) queued_[k] = 0;
        worklist_.clear();
        return dead_;
      }
      for (std::size_t w = 0; w < words_; ++w) target[w] &= scratch_[w];
      set_count(j, remaining);
      enqueue(j);
    }
  }
  return std::nullopt;
}

std::optional<Contradiction> Wave::propagate_all() {
  require_alive();
  for (std::size_t i = 0; i < counts_.size(); ++i) enqueue(i);
  return run_worklist(std::nullopt);
}

std::optional<Contradiction> Wave::propagate() {
  require_alive();
  return run_worklist(std::nullopt);
}

Coord Wave::next_cell_to_collapse() {
  require_alive();
  std::uint32_t best = 0;
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    const auto c = counts_[i];
    if (c <= 1) continue;
    if (ties.empty() || c < best) {
      best = c;
      ties.clear();
    }
    if (c == best) ties.push_back(i);
  }
  if (ties.empty()) throw WaveError(WaveError::Kind::AllCollapsed, "every cell is collapsed");
  return coord(ties[ties.size() == 1 ? 0 : rng_.uniform_index(ties.size())]);
}

std::optional<Contradiction> Wave::apply_pattern(Coord cell, PatternId p) {
  require_alive();
  if (!contains_cell(cell) || p >= model_->pattern_count() || !allows(cell, p)) {
    throw WaveError(WaveError::Kind::InvalidPattern,
                    "pattern " + std::to_string(p) + " is not available at (" +
                        std::to_string(cell.row) + "," + std::to_string(cell.col) + ")");
  }
  const std::size_t i = index(cell);
  auto dom = mutable_domain(i);
  std::fill(dom.begin(), dom.end(), 0);
  bits::set(dom, p);
  set_count(i, 1);
  enqueue(i);
  return run_worklist(p);
}

std::optional<Contradiction> Wave::restrict_domain(Coord cell, std::span<const bits::Word> keep) {
  require_alive();
  const std::size_t i = index(cell);
  auto dom = mutable_domain(i);
  bool changed = false;
  std::size_t remaining = 0;
  for (std::size_t w = 0; w < words_; ++w) {
    const bits::Word next = dom[w] & keep[w];
    changed |= next != dom[w];
    remaining += static_cast<std::size_t>(std::popcount(next));
  }
  if (!changed) return std::nullopt;
  if (remaining == 0) {
    dead_ = Contradiction{cell, std::nullopt};
    for (std::size_t k : worklist_) queued_[k] = 0;
    worklist_.clear();
    return dead_;
  }
  for (std::size_t w = 0; w < words_; ++w) dom[w] &= keep[w];
  set_count(i, remaining);
  enqueue(i);
  return std::nullopt;
}

TileGrid Wave::decode_tiles() const {
  if (dead_ || !fully_collapsed()) {
    throw WaveError(WaveError::Kind::NotFullyCollapsed, "wave is not fully collapsed");
  }
  const int n = model_->n();
  const PatternSet& ps = model_->patterns();
  TileGrid grid(level_height_, level_width_);
  for (int r = 0; r < level_height_; ++r) {
    for (int c = 0; c < level_width_; ++c) {
      const Coord cell{std::min(r, lattice_height_ - 1), std::min(c, lattice_width_ - 1)};
      PatternId p = 0;
      bits::for_each(domain_bits(cell), [&](std::size_t id) { p = static_cast<PatternId>(id); });
      grid.set(r, c, ps[p].at(r - cell.row, c - cell.col, n));
    }
  }
  return grid;
}

Availability Wave::tile_availability() const {
  const int n = model_->n();
  Availability out;
  out.height = level_height_;
  out.width = level_width_;
  out.cells.assign(static_cast<std::size_t>(level_height_) * level_width_, 0);
  for (int r = 0; r < lattice_height_; ++r) {
    for (int c = 0; c < lattice_width_; ++c) {
      const auto dom = domain_bits({r, c});
      for (int dr = 0; dr < n; ++dr) {
        for (int dc = 0; dc < n; ++dc) {
          SymbolSet& slot =
              out.cells[static_cast<std::size_t>(r + dr) * level_width_ + (c + dc)];
          for (Tile t : kAllTiles) {
            if (slot & symbol_bit(t)) continue;
            if (bits::intersects(dom, model_->tile_bits(dr * n + dc, t))) slot |= symbol_bit(t);
          }
        }
      }
    }
  }
  return out;
}

nlohmann::ordered_json Wave::snapshot() const {
  nlohmann::ordered_json out;
  out["lattice"] = {lattice_height_, lattice_width_};
  auto doms = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < counts_.size(); ++i) doms.push_back(domain(coord(i)));
  out["domains"] = std::move(doms);
  return out;
}

PatternId weighted_choice(const PatternSet& ps, std::span<const bits::Word> domain, Rng& rng) {
  std::uint64_t total = 0;
  bits::for_each(domain, [&](std::size_t p) { total += ps.frequency(static_cast<PatternId>(p)); });
  if (total == 0) throw std::invalid_argument("weighted_choice over an empty domain");
  std::uint64_t ticket = rng.uniform_index(static_cast<std::size_t>(total));
  PatternId chosen = 0;
  bool found = false;
  bits::for_each(domain, [&](std::size_t p) {
    if (found) return;
    const auto f = ps.frequency(static_cast<PatternId>(p));
    if (ticket < f) {
      chosen = static_cast<PatternId>(p);
      found = true;
    } else {
      ticket -= f;
    }
  });
  return chosen;
}

std::optional<Contradiction> place_player(Wave& wave, PlayerPlacement* placement) {
  const PatternModel& model = wave.model();
  const int n = model.n();
  const auto players = get_player_patterns(model.patterns());

  Rng& rng = wave.rng();
  const std::size_t cell_index = rng.uniform_index(wave.cell_count());
  const Coord cell{static_cast<int>(cell_index / wave.lattice_width()),
                   static_cast<int>(cell_index % wave.lattice_width())};
  const PatternId pattern = players[rng.uniform_index(players.size())];

  std::vector<bits::Word> keep(model.words(), 0);
  bits::set(keep, pattern);
  if (auto c = wave.restrict_domain(cell, keep)) {
    c->action = pattern;
    return c;
  }
  if (auto c = wave.propagate()) return c;

  const auto& tiles = model.patterns()[pattern].tiles;
  const auto m = static_cast<int>(std::find(tiles.begin(), tiles.end(), Tile::Player) - tiles.begin());
  const Coord spawn{cell.row + m / n, cell.col + m % n};
  if (placement) *placement = {cell, pattern, spawn};

  // A cell may keep an 'M' pattern only when its 'M' lands on the spawn tile.
  const auto player = model.player_bits();
  for (int r = 0; r < wave.lattice_height(); ++r) {
    for (int c = 0; c < wave.lattice_width(); ++c) {
      for (std::size_t w = 0; w < keep.size(); ++w) keep[w] = ~player[w];
      const int dr = spawn.row - r;
      const int dc = spawn.col - c;
      if (dr >= 0 && dc >= 0 && dr < n && dc < n) {
        const auto at_spawn = model.tile_bits(dr * n + dc, Tile::Player);
        for (std::size_t w = 0; w < keep.size(); ++w) keep[w] |= at_spawn[w];
      }
      if (auto contra = wave.restrict_domain({r, c}, keep)) return contra;
    }
  }
  return wave.propagate();
}

std::optional<Contradiction> random_partial_collapse(Wave& wave, std::size_t k) {
  for (std::size_t i = 0; i < k && !wave.fully_collapsed(); ++i) {
    const Coord cell = wave.next_cell_to_collapse();
    const PatternId p = weighted_choice(wave.model().patterns(), wave.domain_bits(cell), wave.rng());
    if (auto c = wave.apply_pattern(cell, p)) return c;
  }
  return std::nullopt;
}

}  // namespace wcrl
