#pragma once

#include <algorithm>
#include <climits>
#include <limits>
#include <optional>
#include <vector>

#include "normsim/env/world.hpp"

namespace normsim {

/// Atoms of the condition language. Cell-scoped atoms refer to the cell an
/// agent entered; all thresholds are strict comparisons.
enum class AtomKind : std::uint8_t {
  CellApple,          // the cell holds an apple (or held the one just eaten there)
  CellForeign,        // the cell is in another agent's territory
  ApplesAroundBelow,  // apples in the cell's 8-neighbourhood < count
  DirtAbove,          // river dirt fraction > level
  Facing,             // agent orientation == facing
  RoleIs,             // agent appearance == role
  UnpaidAbove,        // steps since the agent last paid > count
  OtherViolated,      // another agent violated a recognised prohibition last step
  Cleaned,            // the agent cleaned the river in the last transition
  Paid,               // the agent paid someone in the last transition
  Sanctioned,         // the agent sanctioned someone in the last transition
};

struct Atom {
  AtomKind kind = AtomKind::CellApple;
  int count = 0;
  double level = 0.0;
  Orientation facing = Orientation::North;
  Role role = Role::Cleaner;

  static Atom cell_apple() { return {AtomKind::CellApple}; }
  static Atom cell_foreign() { return {AtomKind::CellForeign}; }
  static Atom apples_around_below(int k) { return {AtomKind::ApplesAroundBelow, k}; }
  static Atom dirt_above(double x) { return {AtomKind::DirtAbove, 0, x}; }
  static Atom facing_is(Orientation o) { Atom a{AtomKind::Facing}; a.facing = o; return a; }
  static Atom role_is(Role r) { Atom a{AtomKind::RoleIs}; a.role = r; return a; }
  static Atom unpaid_above(int k) { return {AtomKind::UnpaidAbove, k}; }
  static Atom other_violated() { return {AtomKind::OtherViolated}; }
  static Atom cleaned() { return {AtomKind::Cleaned}; }
  static Atom paid() { return {AtomKind::Paid}; }
  static Atom sanctioned() { return {AtomKind::Sanctioned}; }

  bool cell_scoped() const noexcept {
    return kind == AtomKind::CellApple || kind == AtomKind::CellForeign || kind == AtomKind::ApplesAroundBelow;
  }

  friend bool operator==(const Atom& a, const Atom& b) noexcept {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case AtomKind::ApplesAroundBelow:
      case AtomKind::UnpaidAbove: return a.count == b.count;
      case AtomKind::DirtAbove: return a.level == b.level;
      case AtomKind::Facing: return a.facing == b.facing;
      case AtomKind::RoleIs: return a.role == b.role;
      default: return true;
    }
  }
};

/// Conjunction of atoms; the empty condition is true.
struct Condition {
  std::vector<Atom> atoms;

  bool cell_scoped() const noexcept {
    return std::any_of(atoms.begin(), atoms.end(), [](const Atom& a) { return a.cell_scoped(); });
  }
  friend bool operator==(const Condition&, const Condition&) = default;
};

struct EvalContext {
  /// Prohibitions that count for OtherViolated; null means every prohibition.
  const NormMask* recognized = nullptr;
};

inline bool other_violated(const WorldState& w, AgentId agent, const EvalContext& ctx) noexcept {
  for (std::size_t k = 0; k < w.agents.size() && k < w.last_violations.size(); ++k) {
    if (static_cast<AgentId>(k) == agent || !w.agents[k].alive) continue;
    if (ctx.recognized ? w.last_violations[k].intersects(*ctx.recognized) : w.last_violations[k].any()) return true;
  }
  return false;
}

/// Direct evaluation of one atom against a world state.
inline bool eval_atom(const Atom& atom, const WorldState& w, AgentId agent, CellIndex cell, const EvalContext& ctx) {
  const AgentState& self = w.agents.at(static_cast<std::size_t>(agent));
  const Layout& L = *w.layout;
  switch (atom.kind) {
    case AtomKind::CellApple:
      return cell != kNoCell && (w.res.apples.test(cell) || (self.ate && self.entered == cell));
    case AtomKind::CellForeign:
      return cell != kNoCell && foreign_to(L, cell, agent);
    case AtomKind::ApplesAroundBelow:
      return cell != kNoCell && apples_around(L, w.res.apples, cell) < atom.count;
    case AtomKind::DirtAbove: return dirt_fraction(w) > atom.level;
    case AtomKind::Facing: return self.facing == atom.facing;
    case AtomKind::RoleIs: return self.role == atom.role;
    case AtomKind::UnpaidAbove: return self.steps_unpaid > atom.count;
    case AtomKind::OtherViolated: return other_violated(w, agent, ctx);
    case AtomKind::Cleaned: return self.cleaned;
    case AtomKind::Paid: return self.paid;
    case AtomKind::Sanctioned: return self.sanctioned;
  }
  return false;
}

/// Valuation of a condition for `agent` in `w`. Cell-scoped atoms are false
/// when no cell is given.
inline bool eval_condition(const Condition& cond, const WorldState& w, AgentId agent,
                           std::optional<CellIndex> cell = std::nullopt, const EvalContext& ctx = {}) {
  const CellIndex c = cell.value_or(kNoCell);
  for (const Atom& a : cond.atoms)
    if (!eval_atom(a, w, agent, c, ctx)) return false;
  return true;
}

/// Everything a compiled condition can look at, gathered once per state.
struct StateFeatures {
  CellIndex cell = kNoCell;
  bool cell_apple = false;
  bool cell_foreign = false;
  int cell_around = 0;
  double dirt = 0.0;
  Orientation facing = Orientation::North;
  Role role = Role::Cleaner;
  int unpaid = 0;
  bool other_violated = false;
  bool cleaned = false;
  bool paid = false;
  bool sanctioned = false;
};

inline StateFeatures features_of(const WorldState& w, AgentId agent, CellIndex cell, const EvalContext& ctx = {}) {
  const AgentState& self = w.agents.at(static_cast<std::size_t>(agent));
  const Layout& L = *w.layout;
  StateFeatures f;
  f.cell = cell;
  if (cell != kNoCell) {
    f.cell_apple = w.res.apples.test(cell) || (self.ate && self.entered == cell);
    f.cell_foreign = foreign_to(L, cell, agent);
    f.cell_around = apples_around(L, w.res.apples, cell);
  }
  f.dirt = dirt_fraction(w);
  f.facing = self.facing;
  f.role = self.role;
  f.unpaid = self.steps_unpaid;
  f.other_violated = other_violated(w, agent, ctx);
  f.cleaned = self.cleaned;
  f.paid = self.paid;
  f.sanctioned = self.sanctioned;
  return f;
}

/// A condition folded into per-feature constraints, so that checking it on a
/// planning transition is a handful of comparisons.
struct CompiledCondition {
  bool never = false;
  bool needs_cell = false;
  bool apple = false;
  bool foreign = false;
  int around_below = INT_MAX;
  double dirt_above = -std::numeric_limits<double>::infinity();
  int facing = -1;
  int role = -1;
  int unpaid_above = INT_MIN;
  bool other = false;
  bool cleaned = false;
  bool paid = false;
  bool sanctioned = false;

  static CompiledCondition compile(const Condition& cond) {
    CompiledCondition cc;
    for (const Atom& a : cond.atoms) {
      cc.needs_cell |= a.cell_scoped();
      switch (a.kind) {
        case AtomKind::CellApple: cc.apple = true; break;
        case AtomKind::CellForeign: cc.foreign = true; break;
        case AtomKind::ApplesAroundBelow: cc.around_below = std::min(cc.around_below, a.count); break;
        case AtomKind::DirtAbove: cc.dirt_above = std::max(cc.dirt_above, a.level); break;
        case AtomKind::Facing:
          if (cc.facing >= 0 && cc.facing != static_cast<int>(a.facing)) cc.never = true;
          cc.facing = static_cast<int>(a.facing);
          break;
        case AtomKind::RoleIs:
          if (cc.role >= 0 && cc.role != static_cast<int>(a.role)) cc.never = true;
          cc.role = static_cast<int>(a.role);
          break;
        case AtomKind::UnpaidAbove: cc.unpaid_above = std::max(cc.unpaid_above, a.count); break;
        case AtomKind::OtherViolated: cc.other = true; break;
        case AtomKind::Cleaned: cc.cleaned = true; break;
        case AtomKind::Paid: cc.paid = true; break;
        case AtomKind::Sanctioned: cc.sanctioned = true; break;
      }
    }
    return cc;
  }

  bool holds(const StateFeatures& f) const noexcept {
    if (never) return false;
    if (needs_cell) {
      if (f.cell == kNoCell) return false;
      if (apple && !f.cell_apple) return false;
      if (foreign && !f.cell_foreign) return false;
      if (f.cell_around >= around_below) return false;
    }
    if (!(f.dirt > dirt_above)) return false;
    if (facing >= 0 && static_cast<int>(f.facing) != facing) return false;
    if (role >= 0 && static_cast<int>(f.role) != role) return false;
    if (f.unpaid <= unpaid_above) return false;
    if (other && !f.other_violated) return false;
    if (cleaned && !f.cleaned) return false;
    if (paid && !f.paid) return false;
    if (sanctioned && !f.sanctioned) return false;
    return true;
  }
};

}  // namespace normsim
