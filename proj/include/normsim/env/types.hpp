#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace normsim {

using AgentId = int;
using CellIndex = int;
inline constexpr CellIndex kNoCell = -1;

enum class Orientation : std::uint8_t { North, East, South, West };
enum class Role : std::uint8_t { Cleaner, Farmer, Egalitarian };

inline constexpr char to_char(Orientation o) noexcept { return "NESW"[static_cast<int>(o)]; }
inline constexpr char to_char(Role r) noexcept { return "CFE"[static_cast<int>(r)]; }

inline std::optional<Orientation> orientation_from_char(char c) noexcept {
  switch (c) {
    case 'N': return Orientation::North;
    case 'E': return Orientation::East;
    case 'S': return Orientation::South;
    case 'W': return Orientation::West;
    default: return std::nullopt;
  }
}

inline std::optional<Role> role_from_char(char c) noexcept {
  switch (c) {
    case 'C': return Role::Cleaner;
    case 'F': return Role::Farmer;
    case 'E': return Role::Egalitarian;
    default: return std::nullopt;
  }
}

enum class ActionKind : std::uint8_t { Noop, MoveNorth, MoveEast, MoveSouth, MoveWest, Clean, Pay, Sanction };
inline constexpr std::size_t kNumActions = 8;

struct Action {
  ActionKind kind = ActionKind::Noop;
  /// Sanction target; negative selects automatically.
  AgentId target = -1;

  friend bool operator==(const Action&, const Action&) = default;
};

inline constexpr int index_of(ActionKind k) noexcept { return static_cast<int>(k); }
inline constexpr ActionKind action_at(std::size_t i) noexcept { return static_cast<ActionKind>(i); }

inline constexpr bool is_move(ActionKind k) noexcept {
  return k == ActionKind::MoveNorth || k == ActionKind::MoveEast || k == ActionKind::MoveSouth ||
         k == ActionKind::MoveWest;
}

inline constexpr Orientation move_direction(ActionKind k) noexcept {
  return static_cast<Orientation>(static_cast<int>(k) - 1);
}

inline constexpr std::array<std::string_view, kNumActions> kActionNames{
    "noop", "north", "east", "south", "west", "clean", "pay", "sanction"};

/// Bitmask over ActionKind, used as the prohibited-action selector of a prohibition.
using ActionMask = std::uint8_t;
inline constexpr ActionMask kMoveActions = 0b0001'1110;
inline constexpr ActionMask bit(ActionKind k) noexcept { return static_cast<ActionMask>(1u << static_cast<int>(k)); }
inline constexpr bool contains(ActionMask m, ActionKind k) noexcept { return (m & bit(k)) != 0; }

}  // namespace normsim
