#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "normsim/learning/oracle.hpp"
#include "support/mdps.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/worlds.hpp"

using namespace normsim;
using namespace normsim::testing;

TEST(Boltzmann, UniformValuesGiveUniformLikelihood) {
  const std::array<double, 8> q{};
  for (std::size_t a = 0; a < 8; ++a) EXPECT_NEAR(boltzmann_likelihood(q, a), 1.0 / 8, 1e-15);
  const std::array<double, 5> q5{3.5, 3.5, 3.5, 3.5, 3.5};
  EXPECT_NEAR(boltzmann_likelihood(q5, 2), 0.2, 1e-15);
}

TEST(Boltzmann, TwoActionClosedForm) {
  const std::array<double, 2> q{1.0, 0.0};
  EXPECT_NEAR(boltzmann_likelihood(q, 0), std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
  EXPECT_NEAR(boltzmann_likelihood(q, 0), 0.731, 5e-4);
}

TEST(Boltzmann, LargeValuesStayFiniteAndPositive) {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    std::array<double, 8> q;
    for (double& x : q) x = (rng.uniform() * 2 - 1) * 1e3;
    double total = 0.0;
    for (std::size_t a = 0; a < 8; ++a) {
      const double ll = boltzmann_log_likelihood(q, a);
      ASSERT_TRUE(std::isfinite(ll));
      ASSERT_LE(ll, 0.0);
      total += std::exp(ll);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Beliefs, UninformativeEvidenceLeavesBeliefsUnchanged) {
  BeliefVector b(3, 0.05);
  for (int t = 0; t < 50; ++t)
    for (std::size_t n = 0; n < 3; ++n) b.update(n, -1.3, -1.3);
  for (std::size_t n = 0; n < 3; ++n) EXPECT_DOUBLE_EQ(b.probability(n), 0.05);
}

TEST(Beliefs, SingleUpdateMatchesBayes) {
  BeliefVector b(1, 0.05);
  b.update(0, std::log(3.0), 0.0);
  EXPECT_NEAR(b.probability(0), 0.05 * 3 / (0.05 * 3 + 0.95), 1e-12);
  EXPECT_NEAR(b.probability(0), 0.136, 5e-4);
}

TEST(Beliefs, CertainBeliefsAreFixed) {
  BeliefVector b(std::vector<double>{1.0, 0.0});
  b.update(0, -50.0, 0.0);
  b.update(1, 50.0, 0.0);
  EXPECT_EQ(b.probability(0), 1.0);
  EXPECT_EQ(b.probability(1), 0.0);
}

TEST(Beliefs, RejectsPriorsOutsideUnitInterval) {
  EXPECT_THROW(BeliefVector(2, 1.5), ConfigError);
  EXPECT_THROW(BeliefVector(std::vector<double>{0.2, -0.1}), ConfigError);
}

TEST(Beliefs, ExtremeEvidenceStaysInUnitInterval) {
  Rng rng(11);
  BeliefVector b(4, 0.05);
  for (int t = 0; t < 5000; ++t) {
    std::array<double, 8> q0, q1;
    for (double& x : q0) x = (rng.uniform() * 2 - 1) * 1e3;
    for (double& x : q1) x = (rng.uniform() * 2 - 1) * 1e3;
    const std::size_t a = rng.below(8);
    b.update(rng.below(4), boltzmann_log_likelihood(q1, a), boltzmann_log_likelihood(q0, a));
    for (std::size_t n = 0; n < 4; ++n) {
      const double p = b.probability(n);
      ASSERT_FALSE(std::isnan(p));
      ASSERT_GE(p, 0.0);
      ASSERT_LE(p, 1.0);
    }
  }
  // Clamped log-odds can still be overturned by contrary evidence.
  BeliefVector c(1, 0.5);
  for (int t = 0; t < 10; ++t) c.update(0, 0.0, -1e3);
  c.update(0, -10.0, 0.0);
  EXPECT_LT(c.log_odds(0), 700.0);
}

// Exact joint posterior over all subsets of two norms, when the likelihood of
// a subset is the norm-free likelihood times one ratio per member norm.
TEST(Beliefs, MeanFieldMatchesExactEnumerationWhenLikelihoodsFactor) {
  for (std::uint64_t seed : {99, 100, 101}) EXPECT_LT(mean_field_gap(seed), 1e-9);
}

TEST(Beliefs, ObservationOrderWithinAStepDoesNotMatter) {
  Rng rng(3);
  std::vector<Observation> step;
  for (AgentId j = 1; j <= 5; ++j) {
    Observation o;
    o.agent = j;
    o.log_l0 = -2.0 * rng.uniform();
    for (int n = 0; n < 6; ++n) o.log_l.push_back(-3.0 * rng.uniform());
    step.push_back(o);
  }
  NormLearner ref(0, BeliefVector(6, 0.05), 0.95, false);
  for (const auto& o : step) ref.observe(o);
  std::vector<int> order{0, 1, 2, 3, 4};
  do {
    NormLearner l(0, BeliefVector(6, 0.05), 0.95, false);
    for (int k : order) l.observe(step[static_cast<std::size_t>(k)]);
    for (std::size_t n = 0; n < 6; ++n)
      ASSERT_NEAR(l.beliefs().probability(n), ref.beliefs().probability(n), 1e-12);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(Learner, IgnoresOwnActionsAndFrozenLearnersIgnoreEverything) {
  Observation o;
  o.log_l0 = -2.0;
  o.log_l = {-0.1};
  NormLearner self(0, BeliefVector(1, 0.05), 0.95, false);
  o.agent = 0;
  self.observe(o);
  EXPECT_DOUBLE_EQ(self.beliefs().probability(0), 0.05);
  o.agent = 1;
  self.observe(o);
  EXPECT_GT(self.beliefs().probability(0), 0.05);

  NormLearner frozen(0, BeliefVector(std::vector<double>{0.0}), 0.95, true);
  frozen.observe(o);
  EXPECT_EQ(frozen.beliefs().probability(0), 0.0);
}

TEST(Learner, ObserverDependentEvidenceNeedsARecognisedViolation) {
  Observation o;
  o.agent = 1;
  o.log_l0 = -2.0;
  o.log_l = {-2.0, -2.0};
  ObserverDependent d;
  d.bit = 1;
  d.other_pre = true;
  d.violations.set(0);
  d.log_l = -0.5;
  o.dependent.push_back(d);

  NormLearner naive(0, BeliefVector(std::vector<double>{0.05, 0.05}), 0.95, false);
  naive.observe(o);
  EXPECT_DOUBLE_EQ(naive.beliefs().probability(1), 0.05);

  NormLearner aware(0, BeliefVector(std::vector<double>{0.99, 0.05}), 0.95, false);
  aware.observe(o);
  EXPECT_GT(aware.beliefs().probability(1), 0.05);
}

TEST(LearnerProperties, PosteriorDoesNotDriftUpWithoutTheNorm) {
  const SanityResult r = learner_sanity(100);
  EXPECT_LE(r.median_null, 0.05 + 0.05);
}

TEST(LearnerProperties, PosteriorConcentratesUnderTheNorm) {
  const SanityResult r = learner_sanity(100);
  EXPECT_GE(r.consistent_rate, 0.9);
}

// A farmer next to a foreign apple: stealing it is less likely when the
// apple-and-foreign prohibition is in force.
TEST(Likelihood, StealingIsLessLikelyUnderP2) {
  const WorldState w = world_from("PA\n---\n.2\n", {Role::Farmer});
  const NormSpace space = generate_norm_space();
  EnvParams env = frozen_env();
  std::array<double, kNumActions> q[2];
  for (int h = 0; h < 2; ++h) {
    ProblemSpec spec{PlanMode::Reward, {}, {}, KeyMode::Exact};
    if (h == 1) spec.prohibitions = compile_prohibitions(space, mask_of({14}), 1.0);
    GridProblem p(w, 0, env, spec);
    Rtdp<GridProblem> rtdp;
    GridTable t;
    Rng rng(1);
    rtdp.converge(p, t, p.root(), rng, 1e-9, 500, 20);
    q[h] = rtdp.q_values(p, t, p.root(), rng);
  }
  const std::size_t east = index_of(ActionKind::MoveEast);
  EXPECT_LT(q[1][east], q[0][east]);
  EXPECT_LT(boltzmann_likelihood(q[1], east), boltzmann_likelihood(q[0], east));
}

namespace {

struct OracleFixture {
  NormSpace space = generate_norm_space();
  EnvParams env;
  OracleConfig cfg;
};

}  // namespace

// Skipping provably irrelevant prohibitions must not change any likelihood.
TEST(Oracle, PruningMatchesFullReplanning) {
  OracleFixture fx;
  OracleConfig full = fx.cfg;
  full.prune = false;
  HypothesisOracle pruned(fx.space, fx.env, fx.cfg, 7), exhaustive(fx.space, fx.env, full, 7);
  Rng rng(17);
  WorldState w = bundled_world();
  for (int t = 0; t < 6; ++t) {
    w = scramble(w, rng);
    w.step = t;
    for (AgentId j = 0; j < 4; ++j) {
      const Action a = random_action(rng);
      const Observation x = pruned.evaluate(w, j, a), y = exhaustive.evaluate(w, j, a);
      ASSERT_EQ(x.log_l0, y.log_l0);
      for (std::size_t n = 0; n < fx.space.size(); ++n) ASSERT_EQ(x.log_l[n], y.log_l[n]) << "norm " << n + 1;
    }
  }
  EXPECT_LT(pruned.replans(), exhaustive.replans());
}

TEST(Oracle, ObligationsWithoutTheirPreconditionCarryNoEvidence) {
  OracleFixture fx;
  HypothesisOracle oracle(fx.space, fx.env, fx.cfg, 3);
  WorldState w = bundled_world();
  w.res.dirt.clear();
  w.res.dirt_count = 0;
  for (auto& a : w.agents) a.steps_unpaid = 0;
  const Observation o = oracle.evaluate(w, 1, Action{ActionKind::MoveNorth});
  for (NormId id = 32; id <= 67; ++id) EXPECT_EQ(o.log_l[bit_of(id)], o.log_l0) << id;
  ASSERT_EQ(o.dependent.size(), 1u);
  EXPECT_EQ(o.dependent[0].bit, bit_of(68));
  EXPECT_FALSE(o.dependent[0].other_pre);
}

// A cleaner that turns its back on an adjacent apple and heads for a dirty
// river is better explained by the cleaning obligation than by reward alone.
TEST(Oracle, WalkingToTheRiverIsEvidenceForACleaningObligation) {
  OracleFixture fx;
  HypothesisOracle oracle(fx.space, fx.env, fx.cfg, 3);
  WorldState w = bundled_world();
  const Layout& L = *w.layout;
  for (CellIndex c : L.river_cells) w.res.dirt.set(c);
  w.res.dirt_count = static_cast<int>(L.river_cells.size());
  refresh_desiccation(L, w.res);
  w.agents[0].pos = L.at(2, 3);
  w.res.apples.set(L.at(2, 4));
  const Observation o = oracle.evaluate(w, 0, Action{ActionKind::MoveNorth});
  // Rows 32 and 35: dirt above 0.3 and 0.35 for cleaners, same Post.
  EXPECT_GT(o.log_l[bit_of(32)], o.log_l0);
  EXPECT_EQ(o.log_l[bit_of(32)], o.log_l[bit_of(35)]);
  // Farmers are not bound by row 33.
  EXPECT_EQ(o.log_l[bit_of(33)], o.log_l0);
}
