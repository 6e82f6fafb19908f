#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "normsim/core/bits.hpp"
#include "normsim/core/error.hpp"
#include "normsim/env/types.hpp"

namespace normsim {

inline constexpr std::size_t kMaxCells = 2048;
inline constexpr std::size_t kMaxPatches = 256;
using CellBits = FixedBits<kMaxCells>;
using PatchBits = FixedBits<kMaxPatches>;

enum class Terrain : std::uint8_t { Land, River };

/// Static geometry of a map: terrain, orchard patches, territories, spawns.
struct Layout {
  int width = 0;
  int height = 0;
  std::vector<Terrain> terrain;
  std::vector<int> patch_of;    // -1 when the cell is not orchard
  std::vector<int> owner_of;    // territory owner agent index, -1 when unowned
  std::vector<CellIndex> river_cells;
  std::vector<CellIndex> orchard_cells;
  std::vector<std::vector<CellIndex>> patch_cells;
  std::vector<CellIndex> spawns;
  std::vector<std::array<CellIndex, 8>> neighbors8;  // kNoCell padding at borders
  std::vector<std::array<CellIndex, 4>> neighbors4;  // indexed by Orientation

  int cells() const noexcept { return width * height; }
  int x_of(CellIndex c) const noexcept { return c % width; }
  int y_of(CellIndex c) const noexcept { return c / width; }
  CellIndex at(int x, int y) const noexcept {
    return (x < 0 || y < 0 || x >= width || y >= height) ? kNoCell : y * width + x;
  }
  bool is_river(CellIndex c) const noexcept { return terrain[c] == Terrain::River; }
  bool is_orchard(CellIndex c) const noexcept { return patch_of[c] >= 0; }
  std::size_t patch_count() const noexcept { return patch_cells.size(); }

  CellIndex step_towards(CellIndex c, Orientation o) const noexcept {
    return neighbors4[c][static_cast<int>(o)];
  }
  int manhattan(CellIndex a, CellIndex b) const noexcept {
    const int dx = x_of(a) - x_of(b), dy = y_of(a) - y_of(b);
    return (dx < 0 ? -dx : dx) + (dy < 0 ? -dy : dy);
  }
};

/// Parsed map document: geometry plus the initial apple and dirt layers.
struct MapDocument {
  std::shared_ptr<const Layout> layout;
  CellBits initial_apples;
  CellBits initial_dirt;
};

namespace detail {

inline std::vector<std::string> split_grid(std::string_view text, int first_line, std::vector<int>& line_numbers) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = first_line;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
    line_numbers.push_back(n);
  }
  return rows;
}

}  // namespace detail

/// Parses a map document.
///
/// Legend: `.` land, `~` river, `A` orchard with an apple, `o` empty orchard,
/// `1`-`9` land in that agent's territory, `P` spawn point, `*` dirty river.
/// An optional overlay follows a line containing `---`; it has the same shape
/// and marks territory digits on top of any base cell (so orchards can lie in
/// a territory). Patches are the maximal 4-connected orchard components.
inline MapDocument load_map(std::string_view text, std::optional<int> expected_agents = std::nullopt) {
  std::string_view base = text, overlay;
  int overlay_first_line = 0;
  if (auto sep = text.find("\n---"); sep != std::string_view::npos) {
    base = text.substr(0, sep + 1);
    auto rest = text.substr(sep + 1);
    auto eol = rest.find('\n');
    overlay = eol == std::string_view::npos ? std::string_view{} : rest.substr(eol + 1);
    overlay_first_line = 1;
    for (char c : base) overlay_first_line += c == '\n';
  }
  std::vector<int> lines, overlay_lines;
  auto rows = detail::split_grid(base, 0, lines);
  if (rows.empty()) throw ConfigError("map: empty document");
  const int width = static_cast<int>(rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (static_cast<int>(rows[r].size()) != width) throw ConfigError("map: non-rectangular row", lines[r]);
  const int height = static_cast<int>(rows.size());
  if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) > kMaxCells)
    throw ConfigError("map: more than " + std::to_string(kMaxCells) + " cells");

  auto layout = std::make_shared<Layout>();
  Layout& L = *layout;
  L.width = width;
  L.height = height;
  const int n = width * height;
  L.terrain.assign(n, Terrain::Land);
  L.patch_of.assign(n, -1);
  L.owner_of.assign(n, -1);
  MapDocument doc;
  std::vector<bool> orchard(n, false);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const CellIndex c = y * width + x;
      const char ch = rows[y][x];
      switch (ch) {
        case '.': break;
        case '~': L.terrain[c] = Terrain::River; break;
        case '*': L.terrain[c] = Terrain::River; doc.initial_dirt.set(c); break;
        case 'A': orchard[c] = true; doc.initial_apples.set(c); break;
        case 'o': orchard[c] = true; break;
        case 'P': L.spawns.push_back(c); break;
        default:
          if (ch >= '1' && ch <= '9') {
            L.owner_of[c] = ch - '1';
          } else {
            throw ConfigError(std::string("map: unknown legend character '") + ch + "'", lines[y]);
          }
      }
    }
  }

  if (!overlay.empty()) {
    auto orows = detail::split_grid(overlay, overlay_first_line, overlay_lines);
    if (static_cast<int>(orows.size()) != height) throw ConfigError("map: overlay height differs from base grid");
    for (int y = 0; y < height; ++y) {
      if (static_cast<int>(orows[y].size()) != width) throw ConfigError("map: non-rectangular overlay row", overlay_lines[y]);
      for (int x = 0; x < width; ++x) {
        const char ch = orows[y][x];
        if (ch == '.') continue;
        if (ch < '1' || ch > '9')
          throw ConfigError(std::string("map: unknown overlay character '") + ch + "'", overlay_lines[y]);
        L.owner_of[y * width + x] = ch - '1';
      }
    }
  }

  L.neighbors8.resize(n);
  L.neighbors4.resize(n);
  static constexpr int dx8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int dy8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  for (int c = 0; c < n; ++c) {
    const int x = c % width, y = c / width;
    for (int k = 0; k < 8; ++k) L.neighbors8[c][k] = L.at(x + dx8[k], y + dy8[k]);
    L.neighbors4[c] = {L.at(x, y - 1), L.at(x + 1, y), L.at(x, y + 1), L.at(x - 1, y)};
    if (L.terrain[c] == Terrain::River) L.river_cells.push_back(c);
    if (orchard[c]) L.orchard_cells.push_back(c);
  }

  // Flood-fill patches in row-major discovery order.
  for (int c = 0; c < n; ++c) {
    if (!orchard[c] || L.patch_of[c] >= 0) continue;
    const int id = static_cast<int>(L.patch_cells.size());
    if (static_cast<std::size_t>(id) >= kMaxPatches) throw ConfigError("map: too many orchard patches");
    std::vector<CellIndex> stack{c}, members;
    L.patch_of[c] = id;
    while (!stack.empty()) {
      const CellIndex cur = stack.back();
      stack.pop_back();
      members.push_back(cur);
      for (CellIndex nb : L.neighbors4[cur]) {
        if (nb != kNoCell && orchard[nb] && L.patch_of[nb] < 0) {
          L.patch_of[nb] = id;
          stack.push_back(nb);
        }
      }
    }
    std::sort(members.begin(), members.end());
    L.patch_cells.push_back(std::move(members));
  }

  if (expected_agents && static_cast<int>(L.spawns.size()) < *expected_agents)
    throw ConfigError("map: " + std::to_string(L.spawns.size()) + " spawn points for " +
                      std::to_string(*expected_agents) + " agents");
  doc.layout = std::move(layout);
  return doc;
}

}  // namespace normsim
