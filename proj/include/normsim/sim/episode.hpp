#pragma once

#include <memory>
#include <vector>

#include "normsim/sim/config.hpp"
#include "normsim/sim/metrics.hpp"

namespace normsim {

struct MetricRow {
  int step = 0;
  double collective_reward = 0.0;
  double desiccated_ratio = 0.0;
  double dirt_fraction = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double arith_mean_top5 = 0.0;
  double geo_mean_top5 = 0.0;
};

enum class EventKind : std::uint8_t { Violation, ObligActivated, ObligSatisfied, ObligViolated, Birth, Death };

inline std::string_view to_string(EventKind k) noexcept {
  constexpr std::string_view names[] = {"violation",       "oblig_activated", "oblig_satisfied",
                                        "oblig_violated", "birth",           "death"};
  return names[static_cast<int>(k)];
}

/// `step` indexes the world state in which the event shows: monitors and
/// replacements report the state they ran on, a violation the state it led to.
struct EventRecord {
  int step = 0;
  AgentId agent = 0;
  EventKind kind = EventKind::Violation;
  NormId norm = 0;  // 0 for birth and death
  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct TrajectoryRow {
  int step = 0;
  AgentId agent = 0;
  int x = 0, y = 0;
  Orientation facing = Orientation::North;
  ActionKind action = ActionKind::Noop;
  double reward = 0.0;
  PlanMode mode = PlanMode::Reward;
  NormId head = 0;
};

/// Everything recorded over one episode. Row t of the per-step streams holds
/// the state after t + 1 environment steps.
struct EpisodeResult {
  std::string condition;
  std::uint64_t seed = 0;
  int agents = 0;
  int norms = 0;
  std::vector<MetricRow> metrics;
  std::vector<double> beliefs;             // [row][agent][norm]
  std::vector<std::uint8_t> experienced;   // [row][agent]
  std::vector<EventRecord> events;
  std::vector<TrajectoryRow> trajectory;

  int rows() const noexcept { return static_cast<int>(metrics.size()); }
  double belief(int row, AgentId agent, std::size_t bit) const {
    return beliefs.at((static_cast<std::size_t>(row) * agents + agent) * norms + bit);
  }
  bool is_experienced(int row, AgentId agent) const {
    return experienced.at(static_cast<std::size_t>(row) * agents + agent) != 0;
  }
  /// Mean belief in `bit` over all agents, or only learners.
  double mean_belief(int row, std::size_t bit, bool learners_only = false) const {
    double s = 0.0;
    int n = 0;
    for (AgentId i = 0; i < agents; ++i) {
      if (learners_only && is_experienced(row, i)) continue;
      s += belief(row, i, bit);
      ++n;
    }
    return n ? s / n : 0.0;
  }
  double geometric_belief(int row, std::size_t bit) const {
    std::vector<double> xs;
    for (AgentId i = 0; i < agents; ++i) xs.push_back(belief(row, i, bit));
    return geometric_mean(xs);
  }
};

struct EpisodeOptions {
  bool trajectory = false;
};

/// Runs one episode of a condition. Deterministic in (config, seed).
class Episode {
 public:
  Episode(const EpisodeConfig& cfg, std::uint64_t seed, EpisodeOptions opt = {})
      : cfg_(checked(cfg)), seed_(seed), opt_(opt), env_rng_(derive_seed(seed, {1})),
        oracle_(*cfg.space, cfg.env, cfg.oracle, derive_seed(seed, {2})) {
    if (cfg_.horizon < 0) throw ConfigError("horizon must be non-negative");
    const std::size_t m = cfg_.agents.size();
    if (m == 0) throw ConfigError("episode has no agents");
    if (cfg_.lifespan && *cfg_.lifespan < 1) throw ConfigError("lifespan must be positive");
    const NormMask universe = cfg_.space->prohibitions() | cfg_.space->obligations();
    if ((cfg_.active & universe) != cfg_.active) throw ConfigError("active norms outside the norm space");

    std::vector<Role> roles;
    for (const auto& a : cfg_.agents) roles.push_back(a.role);
    world_ = make_world(*cfg_.map, roles);
    for (std::size_t i = 0; i < m; ++i) {
      slots_.push_back(make_slot(static_cast<AgentId>(i), 0, cfg_.agents[i].experienced));
      if (cfg_.lifespan) world_.agents[i].age = static_cast<int>(i * static_cast<std::size_t>(*cfg_.lifespan) / m);
    }
    prohibitions_ = compile_prohibitions(*cfg_.space, cfg_.space->prohibitions(), cfg_.planner.violation_cost);
    cfg_.space->obligations().for_each([&](std::size_t b) {
      obligations_.emplace_back(b, &std::get<ObligationNorm>(cfg_.space->norms()[b]));
    });

    result_.condition = cfg_.condition;
    result_.seed = seed;
    result_.agents = static_cast<int>(m);
    result_.norms = static_cast<int>(cfg_.space->size());
    result_.metrics.reserve(static_cast<std::size_t>(cfg_.horizon));
    result_.beliefs.reserve(static_cast<std::size_t>(cfg_.horizon) * m * cfg_.space->size());
  }

  const WorldState& world() const noexcept { return world_; }
  const EpisodeResult& result() const noexcept { return result_; }
  EpisodeResult take_result() { return std::move(result_); }
  bool done() const noexcept { return world_.step >= cfg_.horizon; }
  const NormLearner& learner(AgentId i) const { return slots_.at(static_cast<std::size_t>(i)).learner; }
  const AgentPlanner& planner(AgentId i) const { return slots_.at(static_cast<std::size_t>(i)).planner; }
  int generation(AgentId i) const { return slots_.at(static_cast<std::size_t>(i)).generation; }
  const HypothesisOracle& oracle() const noexcept { return oracle_; }
  /// Joint action of the most recent step; empty before the first.
  const std::vector<Action>& last_actions() const noexcept { return last_actions_; }

  /// Advances one environment step and appends one row to every stream.
  void step() {
    if (done()) throw ContractViolation("episode already finished");
    const int t = world_.step;
    const std::size_t m = slots_.size();

    if (cfg_.lifespan) replace_elders(t);
    advance_monitors(t);

    std::vector<Action> actions(m);
    for (std::size_t i = 0; i < m; ++i) {
      Slot& s = slots_[i];
      const NormMask comply = s.selector.select(s.learner.beliefs().probabilities(), t, s.rng);
      actions[i] = s.planner.act(world_, comply, s.statuses);
    }

    StepOutcome out = normsim::step(world_, actions, cfg_.env, env_rng_);
    WorldState& next = out.next;
    for (std::size_t i = 0; i < m; ++i) {
      const AgentId id = static_cast<AgentId>(i);
      const StateFeatures f = features_of(next, id, next.agents[i].entered);
      next.last_violations[i] = violation_mask(prohibitions_, actions[i].kind, f);
      (next.last_violations[i] & cfg_.active).for_each([&](std::size_t b) {
        result_.events.push_back({t + 1, id, EventKind::Violation, static_cast<NormId>(b + 1)});
      });
      collective_reward_ += out.rewards[i];
      if (opt_.trajectory) {
        const Layout& L = *world_.layout;
        const auto& tr = slots_[i].planner.trace();
        result_.trajectory.push_back({t, id, L.x_of(world_.agents[i].pos), L.y_of(world_.agents[i].pos),
                                      world_.agents[i].facing, actions[i].kind, out.rewards[i], tr.mode, tr.head});
      }
    }

    observe(actions);
    last_actions_ = std::move(actions);
    world_ = std::move(next);
    record();
  }

  EpisodeResult run() {
    while (!done()) step();
    return take_result();
  }

 private:
  static const EpisodeConfig& checked(const EpisodeConfig& cfg) {
    if (!cfg.space || !cfg.map) throw ConfigError("episode needs a norm space and a map");
    return cfg;
  }

  struct Slot {
    AgentPlanner planner;
    NormLearner learner;
    ComplianceSelector selector;
    Rng rng;
    std::vector<ObligationStatus> statuses;
    int generation = 0;
  };

  Slot make_slot(AgentId i, int generation, bool experienced) const {
    const auto n = cfg_.space->size();
    const auto id = static_cast<std::uint64_t>(i), g = static_cast<std::uint64_t>(generation);
    BeliefVector beliefs = BeliefVector(n, cfg_.prior);
    if (experienced) {
      std::vector<double> p(n, 0.0);
      cfg_.active.for_each([&](std::size_t b) { p[b] = 1.0; });
      beliefs = BeliefVector(p);
    }
    return Slot{AgentPlanner(i, *cfg_.space, cfg_.planner, cfg_.env, derive_seed(seed_, {10, id, g})),
                NormLearner(i, std::move(beliefs), cfg_.theta, experienced),
                ComplianceSelector(cfg_.planner.compliance),
                Rng(derive_seed(seed_, {11, id, g})),
                std::vector<ObligationStatus>(n),
                generation};
  }

  /// Agents whose age reached the lifespan are replaced in place by a child
  /// of the same role with fresh planner state and prior beliefs.
  void replace_elders(int t) {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      AgentState& a = world_.agents[i];
      if (a.age < *cfg_.lifespan) continue;
      const AgentId id = static_cast<AgentId>(i);
      result_.events.push_back({t, id, EventKind::Death, 0});
      slots_[i] = make_slot(id, slots_[i].generation + 1, false);
      a.age = 0;
      a.steps_unpaid = 0;
      a.clear_markers();
      world_.last_violations[i].clear();
      result_.events.push_back({t, id, EventKind::Birth, 0});
    }
  }

  void advance_monitors(int t) {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      Slot& s = slots_[i];
      const NormMask recognised = s.learner.beliefs().at_least(cfg_.theta);
      const EvalContext ctx{&recognised};
      const AgentId id = static_cast<AgentId>(i);
      for (const auto& [b, norm] : obligations_) {
        ObligationStatus& st = s.statuses[b];
        st = step_obligation(*norm, st, world_, id, t, ctx);
        if (!cfg_.active.test(b)) continue;
        const NormId nid = static_cast<NormId>(b + 1);
        if (st.is_active() && st.trigger == t) result_.events.push_back({t, id, EventKind::ObligActivated, nid});
        if (st.kind == ObligationStatus::Kind::Satisfied && st.at == t)
          result_.events.push_back({t, id, EventKind::ObligSatisfied, nid});
        if (st.kind == ObligationStatus::Kind::Violated && st.at == t)
          result_.events.push_back({t, id, EventKind::ObligViolated, nid});
      }
    }
  }

  /// Every learner updates on the other agents' actions of this step.
  void observe(const std::vector<Action>& actions) {
    for (std::size_t j = 0; j < slots_.size(); ++j) {
      bool watched = false;
      for (std::size_t i = 0; i < slots_.size(); ++i) watched |= i != j && !slots_[i].learner.frozen();
      if (!watched) continue;
      const Observation obs = oracle_.evaluate(world_, static_cast<AgentId>(j), actions[j]);
      for (auto& s : slots_) s.learner.observe(obs);
    }
  }

  void record() {
    const std::size_t m = slots_.size();
    std::vector<std::vector<double>> matrix;
    PrecisionRecall pr_sum;
    int learners = 0;
    for (const auto& s : slots_) {
      matrix.push_back(s.learner.beliefs().probabilities());
      result_.beliefs.insert(result_.beliefs.end(), matrix.back().begin(), matrix.back().end());
      result_.experienced.push_back(s.learner.frozen());
      if (s.learner.frozen()) continue;
      const PrecisionRecall pr = precision_recall(matrix.back(), cfg_.active, cfg_.theta);
      pr_sum.precision += pr.precision;
      pr_sum.recall += pr.recall;
      ++learners;
    }
    if (learners == 0) {
      for (const auto& row : matrix) {
        const PrecisionRecall pr = precision_recall(row, cfg_.active, cfg_.theta);
        pr_sum.precision += pr.precision;
        pr_sum.recall += pr.recall;
      }
      learners = static_cast<int>(m);
    }
    const PopulationMeans means = population_means(matrix);
    MetricRow r;
    r.step = world_.step;
    r.collective_reward = collective_reward_;
    r.desiccated_ratio = desiccated_ratio(world_);
    r.dirt_fraction = dirt_fraction(world_);
    r.precision = pr_sum.precision / learners;
    r.recall = pr_sum.recall / learners;
    r.arith_mean_top5 = top_k_mean(means.arithmetic);
    r.geo_mean_top5 = top_k_mean(means.geometric);
    result_.metrics.push_back(r);
  }

  EpisodeConfig cfg_;
  std::uint64_t seed_;
  EpisodeOptions opt_;
  Rng env_rng_;
  HypothesisOracle oracle_;
  std::vector<Action> last_actions_;
  WorldState world_;
  std::vector<Slot> slots_;
  std::vector<CompiledProhibition> prohibitions_;
  std::vector<std::pair<std::size_t, const ObligationNorm*>> obligations_;
  double collective_reward_ = 0.0;
  EpisodeResult result_;
};

inline EpisodeResult run_episode(const EpisodeConfig& cfg, std::uint64_t seed, EpisodeOptions opt = {}) {
  return Episode(cfg, seed, opt).run();
}

}  // namespace normsim
