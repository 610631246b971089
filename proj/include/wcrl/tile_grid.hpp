#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wcrl {

// The eight VGLC Lode Runner symbols. The enumerator order is the channel
// order used everywhere a per-symbol array appears.
enum class Tile : std::uint8_t {
  Empty,   // '.'
  Brick,   // 'b' diggable brick
  Solid,   // 'B' solid block
  Ladder,  // '#'
  Rope,    // '-'
  Gold,    // 'G'
  Enemy,   // 'E'
  Player,  // 'M' spawn
};

inline constexpr int kTileCount = 8;
inline constexpr std::array<Tile, kTileCount> kAllTiles = {
    Tile::Empty, Tile::Brick, Tile::Solid, Tile::Ladder,
    Tile::Rope,  Tile::Gold,  Tile::Enemy, Tile::Player};

char tile_char(Tile t);
std::optional<Tile> tile_from_char(char c);

// Bitmask over Tile values; bit i set means static_cast<Tile>(i) is possible.
using SymbolSet = std::uint8_t;

constexpr SymbolSet symbol_bit(Tile t) {
  return static_cast<SymbolSet>(1u << static_cast<unsigned>(t));
}

struct Coord {
  int row = 0;
  int col = 0;
  auto operator<=>(const Coord&) const = default;
};

class TileGrid {
 public:
  TileGrid() = default;
  TileGrid(int height, int width, Tile fill = Tile::Empty);
  TileGrid(int height, int width, std::vector<Tile> cells);

  int height() const { return height_; }
  int width() const { return width_; }
  bool contains(int row, int col) const {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }

  Tile at(int row, int col) const { return cells_[index(row, col)]; }
  void set(int row, int col, Tile t) { cells_[index(row, col)] = t; }
  const std::vector<Tile>& cells() const { return cells_; }

  std::size_t count(Tile t) const;

  bool operator==(const TileGrid&) const = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<Tile> cells_;
};

// Per-tile set of still-possible symbols; the partially collapsed view of a
// level. A fully determined level has a singleton everywhere.
struct Availability {
  int height = 0;
  int width = 0;
  std::vector<SymbolSet> cells;

  SymbolSet at(int row, int col) const {
    return cells[static_cast<std::size_t>(row) * width + col];
  }

  static Availability from_grid(const TileGrid& grid);
};

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Empty, RaggedRows, UnknownSymbol };

  ParseError(Kind kind, int row, int col, const std::string& what)
      : std::runtime_error(what), kind_(kind), row_(row), col_(col) {}

  Kind kind() const { return kind_; }
  int row() const { return row_; }
  int col() const { return col_; }

 private:
  Kind kind_;
  int row_;
  int col_;
};

// Parses VGLC text: one character per tile, one row per line. CRLF and
// trailing newlines are accepted.
TileGrid parse_level(std::string_view text);

// Reads and parses a level file; errors carry the path.
TileGrid load_level(const std::filesystem::path& path);

enum class RenderFormat { Text, Image };

// Text: newline-terminated rows. Image: row-major RGB raster with each tile
// drawn as scale x scale pixels (see tile_color for the palette).
std::vector<std::uint8_t> render_level(const TileGrid& grid,
                                       RenderFormat format, int scale = 8);

std::string render_text(const TileGrid& grid);

// Palette:
//   '.' (0,0,0)        'b' (160,82,45)   'B' (105,105,105)  '#' (222,184,135)
//   '-' (70,130,180)   'G' (255,215,0)   'E' (220,20,60)    'M' (50,205,50)
std::array<std::uint8_t, 3> tile_color(Tile t);

// Writes an RGB raster produced by render_level(Image) as a PNG file.
void write_png(const std::filesystem::path& path,
               const std::vector<std::uint8_t>& rgb, int width, int height);

}  // namespace wcrl
