#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "normsim/learning/beliefs.hpp"
#include "normsim/norms/dsl.hpp"
#include "normsim/planning/agent_planner.hpp"

namespace normsim {

struct OracleConfig {
  int rollouts = 4;
  int samples = 1;  // exogenous events averaged per backup
  int depth = 10;
  double temperature = 1.0;
  double violation_cost = 1.0;
  double gamma = 0.9;
  /// Norm-free rollouts are folded into the persistent tables on steps that
  /// are multiples of this interval.
  int commit_interval = 2;
  bool backward = true;
  /// Skip re-planning prohibitions that provably cannot change Q. Off only
  /// for checking that shortcut.
  bool prune = true;

  void validate() const {
    if (samples < 1) throw ConfigError("oracle samples must be positive");
    if (rollouts < 0 || depth < 1) throw ConfigError("oracle rollouts/depth must be positive");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (commit_interval < 1) throw ConfigError("oracle commit interval must be at least 1");
  }
};

/// Computes the likelihood of an observed action under every single-norm
/// hypothesis, shared by all learners of an episode.
///
/// Q under the norm-free hypothesis comes from RTDP rollouts of the observed
/// agent's planning problem on top of a persistent per-role table. A
/// prohibition hypothesis replays those rollouts from the same random stream
/// on its own overlay of that table, with the norm-free heuristic, so the two
/// estimates differ only through penalties the rollouts meet. A prohibition
/// that no evaluated transition violates would replay bit-identically and is
/// skipped: Q^nu = Q^empty. Obligations whose Pre holds use the
/// obligation-oriented Q of their Post; obligations sharing a Post share one
/// persistent table per role.
class HypothesisOracle {
 public:
  HypothesisOracle(const NormSpace& space, EnvParams env, OracleConfig cfg, std::uint64_t seed)
      : space_(&space), env_(env), cfg_(cfg), seed_(seed) {
    all_prohibitions_ = compile_prohibitions(space, space.prohibitions(), cfg.violation_cost);
    space.obligations().for_each([&](std::size_t b) {
      const auto& o = std::get<ObligationNorm>(space.norms()[b]);
      const std::string key = to_string(o.post);
      auto it = std::find(group_keys_.begin(), group_keys_.end(), key);
      if (it == group_keys_.end()) {
        group_keys_.push_back(key);
        group_posts_.push_back(CompiledCondition::compile(o.post));
        it = group_keys_.end() - 1;
      }
      group_of_[b] = static_cast<int>(it - group_keys_.begin());
    });
  }

  /// Evidence from agent `j` taking `a` in `s`.
  Observation evaluate(const WorldState& s, AgentId j, const Action& a) {
    const AgentState& agent = s.agents.at(static_cast<std::size_t>(j));
    const int role = static_cast<int>(agent.role);
    const std::size_t ai = static_cast<std::size_t>(index_of(a.kind));
    const std::uint64_t stream = derive_seed(seed_, {static_cast<std::uint64_t>(s.step), static_cast<std::uint64_t>(j)});
    Rtdp<GridProblem> rtdp(rtdp_config());
    Rtdp<GridProblem>::EventCache events;
    rtdp.set_cache(&events);

    Observation obs;
    obs.agent = j;

    // Norm-free hypothesis, watching every prohibition.
    NormMask relevant;
    GridProblem none(s, j, env_, ProblemSpec{}, cfg_.gamma);
    none.watch(&all_prohibitions_, &relevant);
    GridTable overlay(std::size_t{1} << 20);
    overlay.set_parent(&base_[role]);
    std::array<double, kNumActions> q0;
    {
      Rng rng(stream);
      rtdp.plan(none, overlay, none.root(), rng);
      q0 = rtdp.q_values(none, overlay, none.root(), rng);
    }
    last_q0_ = q0;
    obs.log_l0 = boltzmann_log_likelihood(q0, ai, cfg_.temperature);
    obs.log_l.assign(space_->size(), obs.log_l0);

    for (const auto& p : all_prohibitions_) {
      if (cfg_.prune && !relevant.test(bit_of(p.id))) continue;
      ProblemSpec spec{PlanMode::Reward, {p}, {}, KeyMode::Egocentric, false, false};
      GridProblem hyp(s, j, env_, std::move(spec), cfg_.gamma);
      GridTable ov(std::size_t{1} << 20);
      ov.set_parent(&base_[role]);
      Rng rng(stream);
      rtdp.plan(hyp, ov, hyp.root(), rng);
      const auto q = rtdp.q_values(hyp, ov, hyp.root(), rng);
      obs.log_l[bit_of(p.id)] = boltzmann_log_likelihood(q, ai, cfg_.temperature);
      ++replans_;
    }

    std::map<int, double> group_ll;
    auto group_log_l = [&](int g) {
      if (auto it = group_ll.find(g); it != group_ll.end()) return it->second;
      ProblemSpec spec{PlanMode::Obligation, {}, group_posts_[g], KeyMode::Egocentric};
      GridProblem hyp(s, j, env_, std::move(spec), cfg_.gamma);
      auto& table = group_table(role, g);
      Rng rng(derive_seed(stream, {static_cast<std::uint64_t>(g) + 1}));
      double ll = obs.log_l0;
      if (!hyp.terminal(hyp.root())) {
        rtdp.plan(hyp, table, hyp.root(), rng);
        ll = boltzmann_log_likelihood(rtdp.q_values(hyp, table, hyp.root(), rng), ai, cfg_.temperature);
      }
      group_ll.emplace(g, ll);
      return ll;
    };

    NormMask others;
    for (std::size_t k = 0; k < s.agents.size() && k < s.last_violations.size(); ++k)
      if (static_cast<AgentId>(k) != j && s.agents[k].alive) others |= s.last_violations[k];

    for (const auto& [b, g] : group_of_) {
      const auto& o = std::get<ObligationNorm>(space_->norms()[b]);
      const bool observer_dependent =
          std::any_of(o.pre.atoms.begin(), o.pre.atoms.end(), [](const Atom& x) { return x.kind == AtomKind::OtherViolated; });
      if (observer_dependent) {
        Condition rest;
        for (const Atom& x : o.pre.atoms)
          if (x.kind != AtomKind::OtherViolated) rest.atoms.push_back(x);
        ObserverDependent d;
        d.bit = b;
        d.other_pre = eval_condition(rest, s, j) && others.any();
        d.violations = others;
        d.log_l = d.other_pre ? group_log_l(g) : obs.log_l0;
        obs.dependent.push_back(d);
      } else if (eval_condition(o.pre, s, j)) {
        obs.log_l[b] = group_log_l(g);
      }
    }

    if (s.step % cfg_.commit_interval == 0) overlay.merge_into(base_[role]);
    return obs;
  }

  /// Number of prohibition hypotheses re-planned so far.
  std::size_t replans() const noexcept { return replans_; }
  /// Norm-free action values from the latest evaluate().
  const std::array<double, kNumActions>& last_null_q() const noexcept { return last_q0_; }

 private:
  RtdpConfig rtdp_config() const {
    RtdpConfig c;
    c.gamma = cfg_.gamma;
    c.depth = cfg_.depth;
    c.trials = cfg_.rollouts;
    c.backward = cfg_.backward;
    c.samples = cfg_.samples;
    return c;
  }

  GridTable& group_table(int role, int g) {
    auto key = std::make_pair(role, g);
    auto it = groups_.find(key);
    if (it == groups_.end()) it = groups_.emplace(key, GridTable{}).first;
    return it->second;
  }

  const NormSpace* space_;
  EnvParams env_;
  OracleConfig cfg_;
  std::uint64_t seed_;
  std::vector<CompiledProhibition> all_prohibitions_;
  std::vector<std::string> group_keys_;
  std::vector<CompiledCondition> group_posts_;
  std::map<std::size_t, int> group_of_;
  std::array<GridTable, 3> base_;
  std::map<std::pair<int, int>, GridTable> groups_;
  std::size_t replans_ = 0;
  std::array<double, kNumActions> last_q0_{};
};

}  // namespace normsim
