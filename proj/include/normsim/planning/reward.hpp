#pragma once

#include <vector>

#include "normsim/norms/norm.hpp"

namespace normsim {

/// Sum of violation costs of the prohibitions broken by taking `a` into a
/// state with features `next`.
inline double violation_penalty(const std::vector<CompiledProhibition>& active, ActionKind a, const StateFeatures& next) {
  double pen = 0.0;
  for (const auto& p : active)
    if (p.violated(a, next)) pen += p.cost;
  return pen;
}

/// Base reward minus the costs of violated prohibitions in the active set.
inline double norm_augmented_reward(double base, const std::vector<CompiledProhibition>& active, ActionKind a,
                                    const StateFeatures& next) {
  return base - violation_penalty(active, a, next);
}

/// Same, evaluated on a world transition for `agent`.
inline double norm_augmented_reward(double base, const std::vector<CompiledProhibition>& active, const Action& a,
                                    const WorldState& next, AgentId agent) {
  return norm_augmented_reward(base, active, a.kind, features_of(next, agent, next.agents.at(agent).entered));
}

}  // namespace normsim
