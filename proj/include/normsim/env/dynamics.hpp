#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "normsim/core/error.hpp"
#include "normsim/core/rng.hpp"
#include "normsim/env/world.hpp"

namespace normsim {

/// Environment constants. All are overridable from the `[env]` config section.
struct EnvParams {
  double regrowth_base = 0.05;          // per empty orchard cell per step
  double desiccated_multiplier = 0.05;  // replaces the density factor on desiccated patches
  double dirt_spawn_prob = 0.5;         // one clean river cell turns dirty with this probability
  double action_cost = 0.01;
  double apple_reward = 1.0;
  double pay_amount = 1.0;
  int clean_range = 2;
};

/// Probability that an empty orchard cell regrows an apple this step.
inline double regrowth_probability(const EnvParams& p, int apple_neighbors, double dirt, bool desiccated) noexcept {
  const double density = desiccated ? p.desiccated_multiplier : static_cast<double>(apple_neighbors) / 8.0;
  return p.regrowth_base * density * (1.0 - dirt);
}

/// Random draws for one step of environment dynamics, drawn independently of
/// the state so the same draws can be replayed against several successor
/// states (common random numbers inside planning rollouts).
struct DynamicsEvent {
  bool spawn_dirt = false;
  double dirt_pick = 0.0;
  std::vector<std::pair<CellIndex, double>> regrowth;  // orchard cells whose draw may succeed
};

inline DynamicsEvent sample_dynamics(const Layout& layout, const EnvParams& p, Rng& rng) {
  DynamicsEvent ev;
  ev.spawn_dirt = rng.uniform() < p.dirt_spawn_prob;
  ev.dirt_pick = rng.uniform();
  const double ceiling = p.regrowth_base * std::max(1.0, p.desiccated_multiplier);
  for (CellIndex c : layout.orchard_cells) {
    const double u = rng.uniform();
    if (u < ceiling) ev.regrowth.emplace_back(c, u);
  }
  return ev;
}

/// Applies dirt spawn, regrowth and desiccation. `blocked` marks cells where an
/// agent stands (no regrowth under agents).
template <class BlockedFn>
void apply_dynamics(const Layout& layout, const EnvParams& p, Resources& res, const DynamicsEvent& ev,
                    BlockedFn&& blocked) {
  const int river = static_cast<int>(layout.river_cells.size());
  if (ev.spawn_dirt && res.dirt_count < river) {
    int k = static_cast<int>(ev.dirt_pick * static_cast<double>(river - res.dirt_count));
    for (CellIndex c : layout.river_cells) {
      if (res.dirt.test(c)) continue;
      if (k-- == 0) {
        res.dirt.set(c);
        ++res.dirt_count;
        break;
      }
    }
  }
  if (ev.regrowth.empty()) return;
  const double dirt = dirt_fraction(layout, res);
  // Decisions read the pre-regrowth apple layer.
  CellIndex grown[kMaxCells];
  int n_grown = 0;
  for (const auto& [c, u] : ev.regrowth) {
    if (res.apples.test(c) || blocked(c)) continue;
    const bool desic = res.desiccated.test(static_cast<std::size_t>(layout.patch_of[c]));
    if (u < regrowth_probability(p, apples_around(layout, res.apples, c), dirt, desic))
      grown[n_grown++] = c;
  }
  for (int i = 0; i < n_grown; ++i) {
    res.apples.set(grown[i]);
    res.desiccated.reset(static_cast<std::size_t>(layout.patch_of[grown[i]]));
  }
}

/// Marks the patch of `c` desiccated if it no longer holds apples.
inline void note_apple_removed(const Layout& layout, Resources& res, CellIndex c) noexcept {
  const int patch = layout.patch_of[c];
  if (patch < 0) return;
  for (CellIndex m : layout.patch_cells[patch])
    if (res.apples.test(m)) return;
  res.desiccated.set(static_cast<std::size_t>(patch));
}

/// Destination of a move, or kNoCell when the move leaves the map or enters the river.
inline CellIndex move_target(const Layout& layout, CellIndex pos, ActionKind k) noexcept {
  const CellIndex t = layout.step_towards(pos, move_direction(k));
  return (t == kNoCell || layout.is_river(t)) ? kNoCell : t;
}

/// Cleans the first dirty river cell straight ahead within `range`.
inline bool clean_ahead(const Layout& layout, Resources& res, CellIndex pos, Orientation facing, int range) noexcept {
  CellIndex c = pos;
  for (int d = 0; d < range; ++d) {
    c = layout.step_towards(c, facing);
    if (c == kNoCell) return false;
    if (layout.is_river(c) && res.dirt.test(c)) {
      res.dirt.reset(c);
      --res.dirt_count;
      return true;
    }
  }
  return false;
}

inline bool adjacent4(const Layout& layout, CellIndex a, CellIndex b) noexcept {
  for (CellIndex nb : layout.neighbors4[a])
    if (nb == b) return true;
  return false;
}

struct StepOutcome {
  WorldState next;
  std::vector<double> rewards;
};

/// Advances the world by one step. `actions` holds one entry per agent slot;
/// entries of dead agents are ignored.
///
/// Order: moves (contested cells go to a uniformly drawn claimant), eating on
/// entry, Clean, Pay, Sanction, action costs, then dirt spawn, regrowth,
/// desiccation and counters.
inline StepOutcome step(const WorldState& world, std::span<const Action> actions, const EnvParams& p, Rng& rng) {
  if (actions.size() != world.agents.size())
    throw ContractViolation("step: expected one action per agent slot");
  StepOutcome out{world, std::vector<double>(world.agents.size(), 0.0)};
  WorldState& w = out.next;
  const Layout& L = *w.layout;
  auto& agents = w.agents;
  const int n = static_cast<int>(agents.size());

  for (auto& a : agents) a.clear_markers();

  // Moves. A move into a currently occupied cell fails.
  std::vector<std::pair<CellIndex, int>> claims;
  for (int i = 0; i < n; ++i) {
    auto& a = agents[i];
    if (!a.alive || !is_move(actions[i].kind)) continue;
    a.facing = move_direction(actions[i].kind);
    const CellIndex t = move_target(L, a.pos, actions[i].kind);
    if (t != kNoCell && !occupied(world, t)) claims.emplace_back(t, i);
  }
  std::sort(claims.begin(), claims.end());
  for (std::size_t b = 0; b < claims.size();) {
    std::size_t e = b;
    while (e < claims.size() && claims[e].first == claims[b].first) ++e;
    const std::size_t k = e - b;
    const int winner = claims[b + (k > 1 ? rng.below(k) : 0)].second;
    auto& a = agents[winner];
    a.pos = claims[b].first;
    a.entered = a.pos;
    if (w.res.apples.test(a.pos)) {
      w.res.apples.reset(a.pos);
      note_apple_removed(L, w.res, a.pos);
      a.ate = true;
      out.rewards[winner] += p.apple_reward;
    }
    b = e;
  }

  for (int i = 0; i < n; ++i) {
    auto& a = agents[i];
    if (a.alive && actions[i].kind == ActionKind::Clean)
      a.cleaned = clean_ahead(L, w.res, a.pos, a.facing, p.clean_range);
  }

  for (int i = 0; i < n; ++i) {
    auto& a = agents[i];
    if (!a.alive || actions[i].kind != ActionKind::Pay) continue;
    int payee = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i || !agents[j].alive || !adjacent4(L, a.pos, agents[j].pos)) continue;
      if (payee < 0 || (agents[j].role == Role::Cleaner && agents[payee].role != Role::Cleaner)) payee = j;
    }
    if (payee >= 0) {
      out.rewards[i] -= p.pay_amount;
      out.rewards[payee] += p.pay_amount;
      a.paid = true;
    }
  }

  for (int i = 0; i < n; ++i) {
    auto& a = agents[i];
    if (!a.alive || actions[i].kind != ActionKind::Sanction) continue;
    int target = actions[i].target;
    if (target < 0 || target >= n || target == i || !agents[target].alive) {
      target = -1;
      for (int j = 0; j < n && target < 0; ++j)
        if (j != i && agents[j].alive && static_cast<std::size_t>(j) < world.last_violations.size() &&
            world.last_violations[j].any())
          target = j;
      if (target < 0) {
        int best = 1 << 30;
        for (int j = 0; j < n; ++j) {
          if (j == i || !agents[j].alive) continue;
          const int d = L.manhattan(a.pos, agents[j].pos);
          if (d < best) { best = d; target = j; }
        }
      }
    }
    a.sanctioned = target >= 0;
  }

  for (int i = 0; i < n; ++i)
    if (agents[i].alive && actions[i].kind != ActionKind::Noop) out.rewards[i] -= p.action_cost;

  const DynamicsEvent ev = sample_dynamics(L, p, rng);
  apply_dynamics(L, p, w.res, ev, [&](CellIndex c) { return occupied(w, c); });

  for (auto& a : agents) {
    if (!a.alive) continue;
    a.steps_unpaid = a.paid ? 0 : a.steps_unpaid + 1;
    ++a.age;
  }
  for (auto& v : w.last_violations) v.clear();
  ++w.step;
  return out;
}

}  // namespace normsim
