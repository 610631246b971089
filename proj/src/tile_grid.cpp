#include "wcrl/tile_grid.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace wcrl {

char tile_char(Tile t) {
  switch (t) {
    case Tile::Empty: return '.';
    case Tile::Brick: return 'b';
    case Tile::Solid: return 'B';
    case Tile::Ladder: return '#';
    case Tile::Rope: return '-';
    case Tile::Gold: return 'G';
    case Tile::Enemy: return 'E';
    case Tile::Player: return 'M';
  }
  return '?';
}

std::optional<Tile> tile_from_char(char c) {
  switch (c) {
    case '.': return Tile::Empty;
    case 'b': return Tile::Brick;
    case 'B': return Tile::Solid;
    case '#': return Tile::Ladder;
    case '-': return Tile::Rope;
    case 'G': return Tile::Gold;
    case 'E': return Tile::Enemy;
    case 'M': return Tile::Player;
    default: return std::nullopt;
  }
}

TileGrid::TileGrid(int height, int width, Tile fill)
    : height_(height),
      width_(width),
      cells_(static_cast<std::size_t>(height) * width, fill) {
  if (height < 0 || width < 0) throw std::invalid_argument("negative grid size");
}

TileGrid::TileGrid(int height, int width, std::vector<Tile> cells)
    : height_(height), width_(width), cells_(std::move(cells)) {
  if (height < 0 || width < 0 ||
      cells_.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("cell count does not match grid size");
  }
}

std::size_t TileGrid::count(Tile t) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), t));
}

Availability Availability::from_grid(const TileGrid& grid) {
  Availability a;
  a.height = grid.height();
  a.width = grid.width();
  a.cells.reserve(grid.cells().size());
  for (Tile t : grid.cells()) a.cells.push_back(symbol_bit(t));
  return a;
}

TileGrid parse_level(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) {
    throw ParseError(ParseError::Kind::Empty, 0, 0, "level text is empty");
  }

  const int height = static_cast<int>(lines.size());
  const int width = static_cast<int>(lines.front().size());
  std::vector<Tile> cells;
  cells.reserve(static_cast<std::size_t>(height) * width);
  for (int r = 0; r < height; ++r) {
    const auto line = lines[static_cast<std::size_t>(r)];
    if (static_cast<int>(line.size()) != width) {
      throw ParseError(ParseError::Kind::RaggedRows, r, 0,
                       "row " + std::to_string(r) + " has length " +
                           std::to_string(line.size()) + ", expected " +
                           std::to_string(width));
    }
    for (int c = 0; c < width; ++c) {
      const auto tile = tile_from_char(line[static_cast<std::size_t>(c)]);
      if (!tile) {
        throw ParseError(ParseError::Kind::UnknownSymbol, r, c,
                         "unknown symbol '" +
                             std::string(1, line[static_cast<std::size_t>(c)]) +
                             "' at (" + std::to_string(r) + "," +
                             std::to_string(c) + ")");
      }
      cells.push_back(*tile);
    }
  }
  if (width == 0) {
    throw ParseError(ParseError::Kind::Empty, 0, 0, "level rows are empty");
  }
  return TileGrid(height, width, std::move(cells));
}

TileGrid load_level(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_level(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.row(), e.col(),
                     path.string() + ": " + e.what());
  }
}

std::string render_text(const TileGrid& grid) {
  std::string out;
  out.reserve(static_cast<std::size_t>(grid.height()) * (grid.width() + 1));
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) out.push_back(tile_char(grid.at(r, c)));
    out.push_back('\n');
  }
  return out;
}

std::array<std::uint8_t, 3> tile_color(Tile t) {
  switch (t) {
    case Tile::Empty: return {0, 0, 0};
    case Tile::Brick: return {160, 82, 45};
    case Tile::Solid: return {105, 105, 105};
    case Tile::Ladder: return {222, 184, 135};
    case Tile::Rope: return {70, 130, 180};
    case Tile::Gold: return {255, 215, 0};
    case Tile::Enemy: return {220, 20, 60};
    case Tile::Player: return {50, 205, 50};
  }
  return {255, 0, 255};
}

std::vector<std::uint8_t> render_level(const TileGrid& grid, RenderFormat format,
                                       int scale) {
  if (format == RenderFormat::Text) {
    const std::string text = render_text(grid);
    return {text.begin(), text.end()};
  }
  if (scale < 1) throw std::invalid_argument("scale must be >= 1");
  const std::size_t px_w = static_cast<std::size_t>(grid.width()) * scale;
  const std::size_t px_h = static_cast<std::size_t>(grid.height()) * scale;
  std::vector<std::uint8_t> rgb(px_w * px_h * 3);
  for (std::size_t y = 0; y < px_h; ++y) {
    for (std::size_t x = 0; x < px_w; ++x) {
      const auto color = tile_color(grid.at(static_cast<int>(y / scale),
                                            static_cast<int>(x / scale)));
      std::copy(color.begin(), color.end(), rgb.begin() + (y * px_w + x) * 3);
    }
  }
  return rgb;
}

void write_png(const std::filesystem::path& path,
               const std::vector<std::uint8_t>& rgb, int width, int height) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw std::invalid_argument("raster size does not match dimensions");
  }
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"),
                                             &std::fclose);
  if (!file) throw std::runtime_error(path.string() + ": cannot open for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(path.string() + ": png write failed");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rgb.data() +
                                             static_cast<std::size_t>(y) * width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace wcrl
