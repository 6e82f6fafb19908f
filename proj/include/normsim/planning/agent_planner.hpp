#pragma once

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "normsim/norms/obligation.hpp"
#include "normsim/planning/compliance.hpp"
#include "normsim/planning/grid_problem.hpp"
#include "normsim/planning/rtdp.hpp"

namespace normsim {

struct PlannerConfig {
  RtdpConfig rtdp;
  int replan_interval = 2;
  double violation_cost = 1.0;
  ComplianceConfig compliance;

  void validate() const {
    if (!(rtdp.gamma > 0.0 && rtdp.gamma < 1.0)) throw ConfigError("planner gamma must lie in (0,1)");
    if (rtdp.depth < 1 || rtdp.trials < 0) throw ConfigError("planner depth must be positive");
    if (rtdp.samples < 1) throw ConfigError("planner samples must be positive");
    if (replan_interval < 1) throw ConfigError("replan interval must be at least 1");
    compliance.validate();
  }
};

struct QueuedObligation {
  NormId id = 0;
  int trigger = 0;
  int deadline = 0;
  friend bool operator==(const QueuedObligation&, const QueuedObligation&) = default;
};

/// What the planner did on one step.
struct PlannerTrace {
  int step = 0;
  PlanMode mode = PlanMode::Reward;
  NormId head = 0;
  std::size_t queue = 0;
  bool replanned = false;
  ActionKind action = ActionKind::Noop;
  double q = 0.0;
};

using GridTable = ValueTable<StateKey, kNumActions, StateKeyHash>;

/// Per-agent norm-compliant planner: reward-oriented RTDP under the active
/// prohibitions, switching to obligation-oriented planning for the head of a
/// FIFO queue of triggered obligations.
class AgentPlanner {
 public:
  AgentPlanner(AgentId self, const NormSpace& space, PlannerConfig cfg, EnvParams env, std::uint64_t seed)
      : self_(self), space_(&space), cfg_(cfg), env_(env), rtdp_(cfg.rtdp), rng_(seed),
        reward_table_(cfg.rtdp.capacity) {}

  /// Chooses this step's action. `statuses` holds this agent's monitor state
  /// per norm bit, already advanced to `world.step`.
  Action act(const WorldState& world, const NormMask& active, const std::vector<ObligationStatus>& statuses) {
    const int step = world.step;
    update_prohibitions(active);
    update_queue(active, statuses, step);

    PlannerTrace tr;
    tr.step = step;
    tr.queue = queue_.size();
    const bool cadence = step % cfg_.replan_interval == 0;
    std::array<double, kNumActions> q{};
    bool decided = false;
    while (!queue_.empty() && !decided) {
      const QueuedObligation head = queue_.front();
      const auto& ob = std::get<ObligationNorm>(space_->at(head.id));
      ProblemSpec spec{PlanMode::Obligation, prohibitions_, CompiledCondition::compile(ob.post), KeyMode::Egocentric};
      GridProblem problem(world, self_, env_, std::move(spec), cfg_.rtdp.gamma);
      if (problem.terminal(problem.root())) {
        queue_.pop_front();  // already discharged
        continue;
      }
      auto& table = obligation_table(head.id);
      tr.replanned = cadence || head.id != last_head_;
      if (tr.replanned) rtdp_.plan(problem, table, problem.root(), rng_);
      q = rtdp_.q_values(problem, table, problem.root(), rng_);
      tr.mode = PlanMode::Obligation;
      tr.head = head.id;
      last_head_ = head.id;
      decided = true;
    }
    if (!decided) {
      ProblemSpec spec{PlanMode::Reward, prohibitions_, {}, KeyMode::Egocentric};
      GridProblem problem(world, self_, env_, std::move(spec), cfg_.rtdp.gamma);
      tr.replanned = cadence || last_head_ != 0;
      if (tr.replanned) rtdp_.plan(problem, reward_table_, problem.root(), rng_);
      q = rtdp_.q_values(problem, reward_table_, problem.root(), rng_);
      last_head_ = 0;
    }
    const std::size_t a = argmax_uniform(q, rng_);
    tr.action = action_at(a);
    tr.q = q[a];
    trace_ = tr;
    return Action{action_at(a)};
  }

  const PlannerTrace& trace() const noexcept { return trace_; }
  const std::deque<QueuedObligation>& queue() const noexcept { return queue_; }
  const NormMask& prohibition_set() const noexcept { return active_prohibitions_; }
  Rng& rng() noexcept { return rng_; }

 private:
  void update_prohibitions(const NormMask& active) {
    const NormMask p = active & space_->prohibitions();
    if (p == active_prohibitions_ && initialised_) return;
    initialised_ = true;
    active_prohibitions_ = p;
    prohibitions_ = compile_prohibitions(*space_, p, cfg_.violation_cost);
    reward_table_.clear();
    obligation_tables_.clear();
  }

  void update_queue(const NormMask& active, const std::vector<ObligationStatus>& statuses, int step) {
    std::erase_if(queue_, [&](const QueuedObligation& q) {
      const auto& s = statuses.at(bit_of(q.id));
      return !active.test(bit_of(q.id)) || !s.is_active() || s.trigger != q.trigger;
    });
    (active & space_->obligations()).for_each([&](std::size_t b) {
      const auto& s = statuses.at(b);
      if (s.is_active() && s.trigger == step) queue_.push_back({static_cast<NormId>(b + 1), s.trigger, s.deadline});
    });
  }

  GridTable& obligation_table(NormId id) {
    auto it = obligation_tables_.find(id);
    if (it == obligation_tables_.end()) it = obligation_tables_.emplace(id, GridTable(cfg_.rtdp.capacity)).first;
    return it->second;
  }

  AgentId self_;
  const NormSpace* space_;
  PlannerConfig cfg_;
  EnvParams env_;
  Rtdp<GridProblem> rtdp_;
  Rng rng_;
  GridTable reward_table_;
  std::map<NormId, GridTable> obligation_tables_;
  std::deque<QueuedObligation> queue_;
  NormMask active_prohibitions_;
  std::vector<CompiledProhibition> prohibitions_;
  bool initialised_ = false;
  NormId last_head_ = 0;
  PlannerTrace trace_;
};

}  // namespace normsim
