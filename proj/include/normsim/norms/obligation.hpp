#pragma once

#include <string>

#include "normsim/core/error.hpp"
#include "normsim/norms/norm.hpp"

namespace normsim {

/// Monitor state of one obligation for one agent.
struct ObligationStatus {
  enum class Kind : std::uint8_t { Inactive, Active, Satisfied, Violated };
  Kind kind = Kind::Inactive;
  int trigger = -1;   // Active: step at which pre held
  int deadline = -1;  // Active: trigger + tau
  int at = -1;        // Satisfied/Violated: step of the verdict

  static ObligationStatus inactive() { return {}; }
  static ObligationStatus active(int t, int tau) { return {Kind::Active, t, t + tau, -1}; }
  static ObligationStatus satisfied(int t) { return {Kind::Satisfied, -1, -1, t}; }
  static ObligationStatus violated(int t) { return {Kind::Violated, -1, -1, t}; }

  bool is_active() const noexcept { return kind == Kind::Active; }
  bool is_terminal() const noexcept { return kind == Kind::Satisfied || kind == Kind::Violated; }
  /// Step this status was last advanced to; -1 before the first call.
  int last_step = -1;

  friend bool operator==(const ObligationStatus& a, const ObligationStatus& b) noexcept {
    return a.kind == b.kind && a.trigger == b.trigger && a.deadline == b.deadline && a.at == b.at;
  }
};

/// Advances a monitor by one step given the valuations of pre and post at that
/// step. One activation at a time: pre is ignored while Active. A verdict
/// re-arms on the next step, where pre may trigger again immediately.
/// Post must hold at some step in (trigger, deadline]; the violation verdict
/// is issued on the first step past the deadline.
inline ObligationStatus advance_obligation(ObligationStatus status, bool pre, bool post, int tau, int step) {
  if (step <= status.last_step)
    throw ContractViolation("obligation monitor advanced to step " + std::to_string(step) + " after step " +
                            std::to_string(status.last_step));
  ObligationStatus next = status;
  if (status.is_active()) {
    if (step > status.deadline)
      next = ObligationStatus::violated(step);
    else if (post)
      next = ObligationStatus::satisfied(step);
  } else {
    next = pre ? ObligationStatus::active(step, tau) : ObligationStatus::inactive();
  }
  next.last_step = step;
  return next;
}

inline ObligationStatus step_obligation(const ObligationNorm& norm, const ObligationStatus& status,
                                        const WorldState& world, AgentId agent, int step,
                                        const EvalContext& ctx = {}) {
  const bool active = status.is_active();
  const bool pre = !active && eval_condition(norm.pre, world, agent, std::nullopt, ctx);
  const bool post = active && eval_condition(norm.post, world, agent, std::nullopt, ctx);
  return advance_obligation(status, pre, post, norm.tau, step);
}

}  // namespace normsim
