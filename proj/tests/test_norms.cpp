#include <gtest/gtest.h>

#include "normsim/norms/dsl.hpp"
#include "normsim/norms/generate.hpp"
#include "normsim/norms/obligation.hpp"
#include "support/oracles.hpp"
#include "support/worlds.hpp"

using namespace normsim;
using namespace normsim::testing;

namespace {

const NormSpace& table() {
  static const NormSpace space = generate_norm_space();
  return space;
}

// Territory 2 covers the right column; the agent (index 0) spawns bottom left.
const char* kSmallMap =
    "~~*~~\n"
    "AAoA.\n"
    "AoAA.\n"
    "P.AoP\n"
    "...P.\n"
    "---\n"
    ".....\n"
    "..222\n"
    "..222\n"
    "..222\n"
    ".....\n";

int brute_neighbours(const WorldState& w, CellIndex c) {
  const Layout& L = *w.layout;
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int x = L.x_of(c) + dx, y = L.y_of(c) + dy;
      if (x < 0 || y < 0 || x >= L.width || y >= L.height) continue;
      n += w.res.apples.test(y * L.width + x);
    }
  return n;
}

}  // namespace

TEST(EvalCondition, EmptyConditionIsTrue) {
  WorldState w = world_from(kSmallMap, {Role::Egalitarian, Role::Farmer, Role::Cleaner});
  EXPECT_TRUE(eval_condition(Condition{}, w, 0));
}

TEST(EvalCondition, DirtAndRole) {
  WorldState w = world_from("**~~*~~*~~\nP.........\n", {Role::Cleaner});
  ASSERT_DOUBLE_EQ(dirt_fraction(w), 0.4);
  Condition c{{Atom::dirt_above(0.3), Atom::role_is(Role::Cleaner)}};
  EXPECT_TRUE(eval_condition(c, w, 0));
  w.agents[0].role = Role::Farmer;
  EXPECT_FALSE(eval_condition(c, w, 0));
}

TEST(EvalCondition, CellAtomsWithoutCellAreFalse) {
  WorldState w = world_from(kSmallMap, {Role::Egalitarian, Role::Farmer, Role::Cleaner});
  EXPECT_FALSE(eval_condition(Condition{{Atom::cell_apple()}}, w, 0));
  EXPECT_TRUE(eval_condition(Condition{{Atom::cell_apple()}}, w, 0, w.layout->at(0, 1)));
}

TEST(EvalCondition, NeighbourCountMatchesBruteForce) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::string map;
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 5; ++x) map += rng.bernoulli(0.5) ? 'A' : 'o';
      map += '\n';
    }
    WorldState w = world_from(map, {});
    w.agents.push_back(AgentState{});
    w.last_violations.resize(1);
    for (int k = 1; k <= 9; ++k) {
      Condition c{{Atom::cell_apple(), Atom::apples_around_below(k)}};
      for (CellIndex cell = 0; cell < 25; ++cell) {
        const bool expect = w.res.apples.test(cell) && brute_neighbours(w, cell) < k;
        ASSERT_EQ(eval_condition(c, w, 0, cell), expect) << "cell " << cell << " k " << k;
      }
    }
  }
}

TEST(EvalCondition, OtherViolatedRespectsRecognisedSet) {
  WorldState w = world_from("P.P\n", {Role::Cleaner, Role::Farmer});
  Condition c{{Atom::other_violated()}};
  EXPECT_FALSE(eval_condition(c, w, 0));
  w.last_violations[1].set(bit_of(14));
  EXPECT_TRUE(eval_condition(c, w, 0));
  EXPECT_FALSE(eval_condition(c, w, 1));
  NormMask recognised = mask_of({17});
  EXPECT_FALSE(eval_condition(c, w, 0, std::nullopt, EvalContext{&recognised}));
  recognised.set(bit_of(14));
  EXPECT_TRUE(eval_condition(c, w, 0, std::nullopt, EvalContext{&recognised}));
}

TEST(CheckProhibition, NoopNeverViolatesMoveProhibitions) {
  Rng rng(4);
  WorldState w = world_from(kSmallMap, {Role::Egalitarian, Role::Farmer, Role::Cleaner});
  for (int t = 0; t < 50; ++t) {
    WorldState s = scramble(w, rng);
    Rng step_rng(t);
    auto next = step(s, std::vector<Action>(3), EnvParams{}, step_rng).next;
    for (NormId id = 1; id <= 31; ++id)
      EXPECT_FALSE(check_prohibition(std::get<ProhibitionNorm>(table().at(id)), s, {}, next, 0));
  }
}

TEST(CheckProhibition, StealingViolatesRow14) {
  WorldState w = world_from(kSmallMap, {Role::Egalitarian, Role::Farmer, Role::Cleaner});
  // Agent 0 at (0,3) walks right twice to reach (2,3), an apple in territory 2
  // (agent 1's land).
  Rng rng(1);
  std::vector<Action> acts{{ActionKind::MoveEast}, {}, {}};
  WorldState s1 = step(w, acts, EnvParams{}, rng).next;
  ASSERT_EQ(s1.agents[0].pos, w.layout->at(1, 3));
  ASSERT_TRUE(foreign_to(*w.layout, w.layout->at(2, 3), 0));
  auto out = step(s1, acts, EnvParams{}, rng);
  const auto& p2 = std::get<ProhibitionNorm>(table().at(14));
  EXPECT_TRUE(out.next.agents[0].ate);
  EXPECT_TRUE(check_prohibition(p2, s1, acts[0], out.next, 0));
  const auto& row1 = std::get<ProhibitionNorm>(table().at(1));
  EXPECT_TRUE(check_prohibition(row1, s1, acts[0], out.next, 0));
}

// The compiled fast path must agree with direct evaluation of Post on s' for
// every enumerated prohibition.
TEST(CheckProhibition, CompiledAgreesWithDirectOnRandomTransitions) {
  const auto compiled = compile_prohibitions(table(), table().prohibitions());
  ASSERT_EQ(compiled.size(), 31u);
  WorldState base = world_from(kSmallMap, {Role::Egalitarian, Role::Farmer, Role::Cleaner});
  Rng rng(77);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    WorldState s = scramble(base, rng, 0.6, rng.uniform());
    std::vector<Action> acts;
    for (int i = 0; i < 3; ++i) acts.push_back(random_action(rng));
    WorldState next = step(s, acts, EnvParams{}, rng).next;
    for (AgentId i = 0; i < 3; ++i) {
      const StateFeatures f = features_of(next, i, next.agents[i].entered);
      for (const auto& cp : compiled) {
        const bool direct = check_prohibition(std::get<ProhibitionNorm>(table().at(cp.id)), s, acts[i], next, i);
        ASSERT_EQ(cp.violated(acts[i].kind, f), direct) << "row " << cp.id << " transition " << t;
        violations += direct;
      }
    }
  }
  EXPECT_GT(violations, 100);
}

TEST(CompiledCondition, ContradictoryAtomsNeverHold) {
  auto cc = CompiledCondition::compile({{Atom::facing_is(Orientation::North), Atom::facing_is(Orientation::East)}});
  StateFeatures f;
  f.facing = Orientation::North;
  EXPECT_FALSE(cc.holds(f));
}

TEST(Obligation, NeverTriggeredStaysInactive) {
  ObligationStatus s;
  for (int t = 0; t < 50; ++t) {
    s = advance_obligation(s, false, t % 3 == 0, 20, t);
    EXPECT_EQ(s.kind, ObligationStatus::Kind::Inactive);
  }
}

TEST(Obligation, CleanWithinWindowIsSatisfied) {
  const auto& o2 = std::get<ObligationNorm>(table().at(32));
  ObligationStatus s;
  for (int t = 0; t <= 25; ++t) {
    s = advance_obligation(s, t == 10, t == 25, o2.tau, t);
    if (t >= 10 && t < 25) {
      ASSERT_TRUE(s.is_active());
      EXPECT_EQ(s.trigger, 10);
      EXPECT_EQ(s.deadline, 30);
    }
  }
  EXPECT_EQ(s, ObligationStatus::satisfied(25));
}

TEST(Obligation, MissedDeadlineIsViolatedAndRearms) {
  ObligationStatus s;
  s = advance_obligation(s, true, false, 3, 0);
  for (int t = 1; t <= 3; ++t) s = advance_obligation(s, true, false, 3, t);
  EXPECT_TRUE(s.is_active());
  s = advance_obligation(s, true, true, 3, 4);
  EXPECT_EQ(s, ObligationStatus::violated(4));
  s = advance_obligation(s, true, false, 3, 5);
  EXPECT_EQ(s, ObligationStatus::active(5, 3));
}

TEST(Obligation, NonMonotoneStepsAreRejected) {
  ObligationStatus s = advance_obligation({}, false, false, 5, 3);
  EXPECT_THROW(advance_obligation(s, false, false, 5, 3), ContractViolation);
  EXPECT_THROW(advance_obligation(s, false, false, 5, 1), ContractViolation);
}

TEST(Obligation, WorldMonitorUsesMarkers) {
  WorldState w = world_from("*~~\n...\nP..\n", {Role::Cleaner});
  const auto& o2 = std::get<ObligationNorm>(table().at(32));
  ObligationStatus s;
  s = step_obligation(o2, s, w, 0, 0);
  ASSERT_TRUE(s.is_active());  // dirt 1/3 > 0.3, cleaner
  EnvParams p;
  p.dirt_spawn_prob = 0;
  Rng rng(1);
  WorldState w1 = step(w, std::vector<Action>{{ActionKind::Clean}}, p, rng).next;
  s = step_obligation(o2, s, w1, 0, 1);
  EXPECT_EQ(s, ObligationStatus::satisfied(1));
}

// Every enumerated obligation: the status machine reports exactly the
// verdicts of the window scan on random boolean traces.
TEST(Obligation, MatchesWindowOracleOnRandomTraces) {
  Rng rng(2718);
  for (NormId id = 1; id <= static_cast<NormId>(table().size()); ++id) {
    const auto* o = std::get_if<ObligationNorm>(&table().at(id));
    if (!o) continue;
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(50));
      const double pp = rng.uniform(), pq = rng.uniform() * 0.2;
      std::vector<bool> pre(n), post(n);
      for (int t = 0; t < n; ++t) {
        pre[t] = rng.bernoulli(pp);
        post[t] = rng.bernoulli(pq);
      }
      ASSERT_EQ(run_monitor(pre, post, o->tau), window_oracle(pre, post, o->tau)) << "row " << id;
    }
  }
}

TEST(Obligation, ShortWindowsMatchOracle) {
  Rng rng(31);
  for (int tau = 1; tau <= 4; ++tau)
    for (int trial = 0; trial < 2000; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(30));
      std::vector<bool> pre(n), post(n);
      for (int t = 0; t < n; ++t) {
        pre[t] = rng.bernoulli(0.5);
        post[t] = rng.bernoulli(0.3);
      }
      ASSERT_EQ(run_monitor(pre, post, tau), window_oracle(pre, post, tau));
    }
}

// A prohibition is an obligation triggered by the prohibited action whose
// post is the negated prohibition post, due within one step.
TEST(Obligation, ProhibitionDuality) {
  WorldState base = world_from(kSmallMap, {Role::Egalitarian, Role::Farmer, Role::Cleaner});
  Rng rng(8);
  for (int t = 0; t < 500; ++t) {
    WorldState s = scramble(base, rng, 0.6, rng.uniform());
    std::vector<Action> acts;
    for (int i = 0; i < 3; ++i) acts.push_back(random_action(rng));
    WorldState next = step(s, acts, EnvParams{}, rng).next;
    for (NormId id = 1; id <= 31; ++id) {
      const auto& p = std::get<ProhibitionNorm>(table().at(id));
      const bool triggered = contains(p.prohib, acts[0].kind);
      const bool post_next = !eval_condition(p.post, next, 0, next.agents[0].entered);
      ObligationStatus o = advance_obligation({}, triggered, false, 1, 0);
      o = advance_obligation(o, false, post_next, 1, 1);
      o = advance_obligation(o, false, false, 1, 2);
      ASSERT_EQ(o.kind == ObligationStatus::Kind::Violated, check_prohibition(p, s, acts[0], next, 0));
    }
  }
}

TEST(Generate, DefaultSpaceHas68Rows) {
  const NormSpace& s = table();
  EXPECT_EQ(s.size(), 68u);
  EXPECT_EQ(s.prohibitions().count(), 31u);
  EXPECT_EQ(s.obligations().count(), 37u);
  for (NormId id = 1; id <= 31; ++id) EXPECT_TRUE(is_prohibition(s.at(id)));
  for (NormId id = 32; id <= 68; ++id) EXPECT_TRUE(is_obligation(s.at(id)));
}

TEST(Generate, Row32IsCleanerCleaning) {
  const ObligationNorm expect{{{Atom::dirt_above(0.3), Atom::role_is(Role::Cleaner)}}, {{Atom::cleaned()}}, 20};
  EXPECT_EQ(std::get<ObligationNorm>(table().at(32)), expect);
}

TEST(Generate, DefaultBindings) {
  EXPECT_EQ(to_string(table().at(17)), "PROHIB move IF apple(cell) & around(cell)<3");
  EXPECT_EQ(to_string(table().at(14)), "PROHIB move IF apple(cell) & foreign(cell)");
  EXPECT_EQ(to_string(table().at(54)), "OBLIG pay IF unpaid>10 & role=F WITHIN 30");
  EXPECT_EQ(to_string(table().at(34)), "OBLIG clean IF dirt>0.3 & role=E WITHIN 20");
  EXPECT_EQ(to_string(table().at(68)), "OBLIG sanction IF other_violated WITHIN 20");
}

TEST(Generate, EmptyDirtGridDrops28) {
  GenerationParams g;
  g.dirt_thresholds.clear();
  EXPECT_EQ(generate_norm_space(g).size(), 40u);
}

TEST(Generate, EmptyGridsAreConfigErrors) {
  GenerationParams g;
  g.roles.clear();
  EXPECT_THROW(generate_norm_space(g), ConfigError);
  GenerationParams none;
  none.dirt_thresholds.clear();
  none.orientations.clear();
  none.around_thresholds.clear();
  none.foreign_around_thresholds.clear();
  none.unpaid_thresholds.clear();
  none.sanction = false;
  EXPECT_EQ(generate_norm_space(none).size(), 3u);
}

TEST(Generate, Deterministic) { EXPECT_EQ(generate_norm_space(), generate_norm_space()); }

TEST(Generate, GoldenFile) {
  std::string expect = read_text(source_path("tests/golden/norm_space.txt"));
  std::string got;
  for (NormId id = 1; id <= static_cast<NormId>(table().size()); ++id)
    got += std::to_string(id) + " " + to_string(table().at(id)) + "\n";
  EXPECT_EQ(got, expect);
}
