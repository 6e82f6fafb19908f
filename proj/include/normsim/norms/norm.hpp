#pragma once

#include <string>
#include <variant>
#include <vector>

#include "normsim/core/error.hpp"
#include "normsim/norms/condition.hpp"

namespace normsim {

/// Forbids the actions in `prohib` whenever the successor state satisfies `post`.
struct ProhibitionNorm {
  ActionMask prohib = 0;
  Condition post;

  friend bool operator==(const ProhibitionNorm&, const ProhibitionNorm&) = default;
};

/// Once `pre` holds, `post` must hold within `tau` steps.
struct ObligationNorm {
  Condition pre;
  Condition post;
  int tau = 1;

  friend bool operator==(const ObligationNorm&, const ObligationNorm&) = default;
};

using Norm = std::variant<ProhibitionNorm, ObligationNorm>;

inline bool is_prohibition(const Norm& n) noexcept { return std::holds_alternative<ProhibitionNorm>(n); }
inline bool is_obligation(const Norm& n) noexcept { return std::holds_alternative<ObligationNorm>(n); }

/// 1-based row number inside a NormSpace. Bit `id - 1` of a NormMask.
using NormId = int;

inline std::size_t bit_of(NormId id) noexcept { return static_cast<std::size_t>(id - 1); }

/// Immutable ordered list of norms.
class NormSpace {
 public:
  NormSpace() = default;
  explicit NormSpace(std::vector<Norm> norms) : norms_(std::move(norms)) {
    if (norms_.size() > kMaxNorms)
      throw ConfigError("norm space holds " + std::to_string(norms_.size()) + " norms, limit is " +
                        std::to_string(kMaxNorms));
    for (std::size_t i = 0; i < norms_.size(); ++i) {
      if (const auto* o = std::get_if<ObligationNorm>(&norms_[i])) {
        if (o->tau < 1) throw ConfigError("obligation " + std::to_string(i + 1) + " has tau < 1");
        obligations_.set(i);
      } else {
        const auto& p = std::get<ProhibitionNorm>(norms_[i]);
        if ((p.prohib & ~ActionMask((1u << kNumActions) - 1)) != 0)
          throw ConfigError("prohibition " + std::to_string(i + 1) + " selects unknown actions");
        prohibitions_.set(i);
      }
    }
  }

  std::size_t size() const noexcept { return norms_.size(); }
  bool empty() const noexcept { return norms_.empty(); }
  bool contains(NormId id) const noexcept { return id >= 1 && static_cast<std::size_t>(id) <= norms_.size(); }

  const Norm& at(NormId id) const {
    if (!contains(id)) throw ContractViolation("norm id " + std::to_string(id) + " out of range");
    return norms_[bit_of(id)];
  }
  const std::vector<Norm>& norms() const noexcept { return norms_; }

  const NormMask& prohibitions() const noexcept { return prohibitions_; }
  const NormMask& obligations() const noexcept { return obligations_; }

  friend bool operator==(const NormSpace& a, const NormSpace& b) { return a.norms_ == b.norms_; }

 private:
  std::vector<Norm> norms_;
  NormMask prohibitions_;
  NormMask obligations_;
};

inline NormMask mask_of(const std::vector<NormId>& ids) {
  NormMask m;
  for (NormId id : ids) m.set(bit_of(id));
  return m;
}

inline std::vector<NormId> ids_of(const NormMask& m) {
  std::vector<NormId> out;
  m.for_each([&](std::size_t b) { out.push_back(static_cast<NormId>(b + 1)); });
  return out;
}

/// True when `agent` violated the prohibition on the transition (s, a, s_next).
/// Cell-scoped atoms refer to the cell the agent entered.
inline bool check_prohibition(const ProhibitionNorm& norm, const WorldState& s, Action a, const WorldState& s_next,
                              AgentId agent, const EvalContext& ctx = {}) {
  (void)s;
  if (!contains(norm.prohib, a.kind)) return false;
  const CellIndex cell = s_next.agents.at(static_cast<std::size_t>(agent)).entered;
  return eval_condition(norm.post, s_next, agent, cell, ctx);
}

/// Prohibition compiled for repeated checks against StateFeatures.
struct CompiledProhibition {
  NormId id = 0;
  ActionMask prohib = 0;
  CompiledCondition post;
  double cost = 1.0;  // violation cost C(nu)

  bool violated(ActionKind a, const StateFeatures& next) const noexcept {
    return contains(prohib, a) && post.holds(next);
  }
};

inline std::vector<CompiledProhibition> compile_prohibitions(const NormSpace& space, const NormMask& subset,
                                                             double cost = 1.0) {
  std::vector<CompiledProhibition> out;
  subset.for_each([&](std::size_t b) {
    if (b >= space.size()) return;
    if (const auto* p = std::get_if<ProhibitionNorm>(&space.norms()[b]))
      out.push_back({static_cast<NormId>(b + 1), p->prohib, CompiledCondition::compile(p->post), cost});
  });
  return out;
}

/// Prohibitions among `subset` that `agent` violated on this transition.
inline NormMask violation_mask(const std::vector<CompiledProhibition>& prohibitions, ActionKind a,
                               const StateFeatures& next) {
  NormMask m;
  for (const auto& p : prohibitions)
    if (p.violated(a, next)) m.set(bit_of(p.id));
  return m;
}

}  // namespace normsim
