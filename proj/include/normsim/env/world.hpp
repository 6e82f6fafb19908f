#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "normsim/core/bits.hpp"
#include "normsim/core/error.hpp"
#include "normsim/env/layout.hpp"
#include "normsim/env/types.hpp"

namespace normsim {

inline constexpr std::size_t kMaxNorms = 128;
/// Set of norms, indexed by position in a NormSpace.
using NormMask = FixedBits<kMaxNorms>;

/// Mutable resource layers of the world.
struct Resources {
  CellBits apples;
  CellBits dirt;       // indexed by cell; only river cells are ever set
  PatchBits desiccated;
  int dirt_count = 0;

  friend bool operator==(const Resources&, const Resources&) = default;
};

struct AgentState {
  AgentId id = 0;
  CellIndex pos = kNoCell;
  Orientation facing = Orientation::North;
  Role role = Role::Egalitarian;
  int steps_unpaid = 0;
  // Effects of the most recent transition only.
  bool cleaned = false;
  bool paid = false;
  bool sanctioned = false;
  bool ate = false;
  CellIndex entered = kNoCell;
  int age = 0;
  bool alive = true;

  void clear_markers() noexcept {
    cleaned = paid = sanctioned = ate = false;
    entered = kNoCell;
  }

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct WorldState {
  std::shared_ptr<const Layout> layout;
  Resources res;
  std::vector<AgentState> agents;
  /// Prohibitions each agent violated in the transition into this state.
  std::vector<NormMask> last_violations;
  int step = 0;

  const Layout& map() const noexcept { return *layout; }

  friend bool operator==(const WorldState& a, const WorldState& b) {
    return a.layout == b.layout && a.res == b.res && a.agents == b.agents &&
           a.last_violations == b.last_violations && a.step == b.step;
  }
};

inline double dirt_fraction(const Layout& layout, const Resources& res) noexcept {
  return layout.river_cells.empty() ? 0.0
                                    : static_cast<double>(res.dirt_count) / static_cast<double>(layout.river_cells.size());
}
inline double dirt_fraction(const WorldState& w) noexcept { return dirt_fraction(*w.layout, w.res); }

/// Desiccated patches over all patches; 0 for maps without orchards.
inline double desiccated_ratio(const WorldState& w) noexcept {
  const auto patches = w.layout->patch_count();
  return patches == 0 ? 0.0 : static_cast<double>(w.res.desiccated.count()) / static_cast<double>(patches);
}

inline int apples_around(const Layout& layout, const CellBits& apples, CellIndex c) noexcept {
  int n = 0;
  for (CellIndex nb : layout.neighbors8[c]) n += (nb != kNoCell && apples.test(nb));
  return n;
}

/// True when `c` lies in some other agent's territory.
inline bool foreign_to(const Layout& layout, CellIndex c, AgentId agent) noexcept {
  const int owner = layout.owner_of[c];
  return owner >= 0 && owner != agent;
}

/// Recomputes desiccation flags: a patch is desiccated while it holds no apples.
inline void refresh_desiccation(const Layout& layout, Resources& res) noexcept {
  for (std::size_t p = 0; p < layout.patch_cells.size(); ++p) {
    bool any = false;
    for (CellIndex c : layout.patch_cells[p]) {
      if (res.apples.test(c)) { any = true; break; }
    }
    res.desiccated.assign(p, !any);
  }
}

/// Builds the initial world from a map and a role per agent. Agent i spawns at
/// the i-th spawn point facing north.
inline WorldState make_world(const MapDocument& doc, const std::vector<Role>& roles) {
  const Layout& L = *doc.layout;
  if (roles.size() > L.spawns.size())
    throw ConfigError("map: " + std::to_string(L.spawns.size()) + " spawn points for " +
                      std::to_string(roles.size()) + " agents");
  WorldState w;
  w.layout = doc.layout;
  w.res.apples = doc.initial_apples;
  w.res.dirt = doc.initial_dirt;
  w.res.dirt_count = static_cast<int>(doc.initial_dirt.count());
  refresh_desiccation(L, w.res);
  for (std::size_t i = 0; i < roles.size(); ++i) {
    AgentState a;
    a.id = static_cast<AgentId>(i);
    a.pos = L.spawns[i];
    a.role = roles[i];
    w.agents.push_back(a);
  }
  w.last_violations.assign(roles.size(), NormMask{});
  return w;
}

inline bool occupied(const WorldState& w, CellIndex c) noexcept {
  for (const auto& a : w.agents)
    if (a.alive && a.pos == c) return true;
  return false;
}

}  // namespace normsim
