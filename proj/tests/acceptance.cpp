// Acceptance checks. One line per criterion; exit status 1 if any fails.
// Usage: normsim_acceptance [criterion ...]   (default: all of 1-9)
// NORMSIM_JOBS sets the worker count for the episode-based criteria.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "normsim/norms/generate.hpp"
#include "normsim/sim/runner.hpp"
#include "support/mdps.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace normsim;
using namespace normsim::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Check {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned jobs() {
  if (const char* env = std::getenv("NORMSIM_JOBS")) return static_cast<unsigned>(std::max(1, std::atoi(env)));
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentConfig shipped(const char* name) {
  return load_experiment(std::string(NORMSIM_SOURCE_DIR) + "/configs/" + name + ".ini", experiment_from(name));
}

/// Runs every (condition, seed) of `x`, reducing each result on a worker
/// with `reduce`; the reductions come back in condition-major seed order.
template <class R, class F>
std::vector<R> run_all(const ExperimentConfig& x, F reduce) {
  const auto tasks = run_tasks(x);
  std::vector<R> out(tasks.size());
  run_pool<R>(
      tasks.size(), jobs(),
      [&](std::size_t i) {
        const auto& c = x.conditions[tasks[i].condition];
        return reduce(c, Episode(c, tasks[i].seed).run());
      },
      [&](std::size_t i, R&& r) { out[i] = std::move(r); });
  return out;
}

std::string csv(void (*writer)(std::ostream&, const EpisodeResult&), const EpisodeResult& r) {
  std::ostringstream s;
  writer(s, r);
  return s.str();
}

Check obligation_oracle() {
  const auto t0 = Clock::now();
  const NormSpace space = generate_norm_space();
  Rng rng(2718);
  int norms = 0, mismatches = 0;
  for (NormId id = 1; id <= static_cast<NormId>(space.size()); ++id) {
    const auto* o = std::get_if<ObligationNorm>(&space.at(id));
    if (!o) continue;
    ++norms;
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(50));
      const double pp = rng.uniform(), pq = rng.uniform() * 0.2;
      std::vector<bool> pre(n), post(n);
      for (int t = 0; t < n; ++t) {
        pre[t] = rng.bernoulli(pp);
        post[t] = rng.bernoulli(pq);
      }
      mismatches += run_monitor(pre, post, o->tau) != window_oracle(pre, post, o->tau);
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0,
          fmt("%d obligations x 1000 traces, %d mismatches, %.2f s (limit 10 s)", norms, mismatches, secs)};
}

Check mean_field() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) worst = std::max(worst, mean_field_gap(seed, 20));
  return {worst < 1e-9, fmt("max |mean-field - exact| over 20 problems = %.3g (limit 1e-9)", worst)};
}

Check planner_optimality() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const SmallMdp& m : {corridor_mdp(), two_route_mdp(true), cleaning_mdp()}) {
    const auto rep = check_against_value_iteration(m, 1);
    const double gap = std::abs(rep.v_rtdp - rep.v_vi);
    ok &= rep.policy_match && gap <= 1e-3 && rep.states <= 10000;
    detail += fmt("%s: %zu states, |dV| %.2g, policy %s; ", m.name.c_str(), rep.states, gap,
                  rep.policy_match ? "match" : "differs");
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 60.0, detail + fmt("%.2f s (limit 60 s)", secs)};
}

// Criterion 8 reuses the first passive run when criterion 4 ran.
struct PassiveRun {
  double core_mean = 0.0;  // learners' mean over P1, P2, O2, O3 at t = H
  std::vector<double> o1;  // learners' O1 belief per step
  double recall = 0.0, precision = 0.0;
  std::string beliefs, metrics;
};

PassiveRun reduce_passive(const EpisodeConfig&, const EpisodeResult& r) {
  PassiveRun p;
  const int last = r.rows() - 1;
  for (NormId id : {17, 14, 32, 34}) p.core_mean += r.mean_belief(last, bit_of(id), true) / 4.0;
  for (int row = 0; row < r.rows(); ++row) p.o1.push_back(r.mean_belief(row, bit_of(54), true));
  p.recall = r.metrics.back().recall;
  p.precision = r.metrics.back().precision;
  if (r.seed == 1) {
    p.beliefs = csv(write_beliefs_csv, r);
    p.metrics = csv(write_metrics_csv, r);
  }
  return p;
}

std::optional<PassiveRun> first_passive;

Check passive_learning() {
  const auto t0 = Clock::now();
  const ExperimentConfig x = shipped("passive");
  const auto runs = run_all<PassiveRun>(x, reduce_passive);
  const double secs = seconds_since(t0);
  const std::size_t n = runs.size();
  int hits = 0;
  double o1_max = 0.0, recall = 0.0, precision = 0.0;
  for (const auto& r : runs) {
    hits += r.core_mean >= 0.95;
    recall += r.recall / static_cast<double>(n);
    precision += r.precision / static_cast<double>(n);
  }
  for (std::size_t t = 0; t < runs.front().o1.size(); ++t) {
    double m = 0.0;
    for (const auto& r : runs) m += r.o1[t] / static_cast<double>(n);
    o1_max = std::max(o1_max, m);
  }
  for (const auto& r : runs)
    if (!r.beliefs.empty()) first_passive = r;
  const bool ok = hits >= 9 && o1_max < 0.7 && std::abs(recall - 0.83) <= 0.15 && precision <= 0.6 && secs <= 900.0;
  return {ok, fmt("%d/%zu seeds with mean{P1,P2,O2,O3} >= 0.95 (need 9); max mean O1 %.3f (< 0.7); "
                  "recall %.3f (0.83 +- 0.15); precision %.3f (<= 0.6); %.0f s (<= 900 s)",
                  hits, n, o1_max, recall, precision, secs)};
}

struct FinalOutcome {
  double reward = 0.0, desiccated = 0.0;
};

Check social_outcomes() {
  const ExperimentConfig x = shipped("outcomes");
  const auto runs = run_all<FinalOutcome>(x, [](const EpisodeConfig&, const EpisodeResult& r) {
    return FinalOutcome{r.metrics.back().collective_reward, r.metrics.back().desiccated_ratio};
  });
  const std::size_t n = x.seeds.size();
  int reward_wins = 0, desic_wins = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto& on = runs[s];
    const auto& off = runs[n + s];
    reward_wins += on.reward > off.reward;
    desic_wins += on.desiccated < off.desiccated;
  }
  return {reward_wins >= 10 && desic_wins >= 10,
          fmt("reward higher with norms in %d/%zu pairs (need 10); desiccation lower in %d/%zu (need 10)",
              reward_wins, n, desic_wins, n)};
}

struct Generational {
  std::array<double, 3> p1{}, p2{}, o2{};  // population means at each cycle's end
};

Check intergenerational() {
  const ExperimentConfig x = shipped("intergen");
  const auto runs = run_all<Generational>(x, [](const EpisodeConfig& c, const EpisodeResult& r) {
    Generational g;
    for (int k = 0; k < 3; ++k) {
      const int row = (k + 1) * c.horizon / 3 - 1;
      g.p1[k] = r.mean_belief(row, bit_of(17));
      g.p2[k] = r.mean_belief(row, bit_of(14));
      g.o2[k] = r.mean_belief(row, bit_of(32));
    }
    return g;
  });
  const std::size_t n = x.seeds.size();
  std::size_t short_idx = x.conditions.size(), long_idx = x.conditions.size();
  for (std::size_t c = 0; c < x.conditions.size(); ++c) {
    if (x.conditions[c].lifespan == 50) short_idx = c;
    if (x.conditions[c].lifespan == 600) long_idx = c;
  }
  if (short_idx == x.conditions.size() || long_idx == x.conditions.size())
    return {false, "intergen config must include lifespans 50 and 600"};
  int sustained = 0;
  double o2_end = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto& g = runs[short_idx * n + s];
    sustained += std::all_of(g.p1.begin(), g.p1.end(), [](double v) { return v >= 0.8; });
    o2_end += g.o2[2] / static_cast<double>(n);
  }
  double long_min = 1.0;
  for (int k = 0; k < 3; ++k) {
    double p1 = 0.0, p2 = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      p1 += runs[long_idx * n + s].p1[k] / static_cast<double>(n);
      p2 += runs[long_idx * n + s].p2[k] / static_cast<double>(n);
    }
    long_min = std::min({long_min, p1, p2});
  }
  return {sustained >= 9 && o2_end < 0.5 && long_min >= 0.9,
          fmt("L=50: P1 >= 0.8 at all cycle ends in %d/%zu seeds (need 9), final mean O2 %.3f (< 0.5); "
              "L=600: lowest cycle-end mean of P1, P2 %.3f (>= 0.9)",
              sustained, n, o2_end, long_min)};
}

Check emergence() {
  const ExperimentConfig x = shipped("emergence");
  struct Emerged {
    bool any = false;
    NormId norm = 0;
  };
  const auto runs = run_all<Emerged>(x, [](const EpisodeConfig&, const EpisodeResult& r) {
    const int rows = r.rows();
    for (int b = 0; b < r.norms; ++b) {
      const auto bit = static_cast<std::size_t>(b);
      bool reached = false;
      for (int row = 0; row < rows && !reached; ++row) reached = r.geometric_belief(row, bit) >= 0.95;
      if (!reached) continue;
      bool monotone = true;
      for (int row = std::max(1, rows - 50); row < rows && monotone; ++row)
        monotone = r.geometric_belief(row, bit) >= r.geometric_belief(row - 1, bit);
      if (monotone) return Emerged{true, b + 1};
    }
    return Emerged{};
  });
  int hits = 0;
  std::string which;
  for (const auto& e : runs) {
    hits += e.any;
    if (e.any) which += " " + std::to_string(e.norm);
  }
  return {hits >= 7, fmt("%d/%zu seeds with a norm at geometric mean >= 0.95 and non-decreasing over the last 50 "
                         "steps (need 7); norms:%s",
                         hits, runs.size(), which.empty() ? " none" : which.c_str())};
}

Check determinism() {
  ExperimentConfig x = shipped("passive");
  auto once = [&] {
    const EpisodeResult r = Episode(x.conditions.front(), 1).run();
    return std::make_pair(csv(write_beliefs_csv, r), csv(write_metrics_csv, r));
  };
  const auto a = first_passive ? std::make_pair(first_passive->beliefs, first_passive->metrics) : once();
  const auto b = once();
  return {a == b, fmt("passive seed 1 rerun: beliefs.csv %s, metrics.csv %s", a.first == b.first ? "identical" : "differs",
                      a.second == b.second ? "identical" : "differs")};
}

Check learner_sanity_check() {
  const SanityResult r = learner_sanity(100, 2024);
  return {r.median_null - 0.05 <= 0.05 && r.consistent_rate >= 0.9,
          fmt("median null posterior %.4f (prior 0.05, slack 0.05); consistency %.2f (>= 0.9)", r.median_null,
              r.consistent_rate)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::pair<int, Check (*)()> criteria[] = {
      {1, obligation_oracle}, {2, mean_field},       {3, planner_optimality},
      {4, passive_learning},  {5, social_outcomes},  {6, intergenerational},
      {7, emergence},         {8, determinism},      {9, learner_sanity_check}};
  bool all = true;
  for (const auto& [id, run] : criteria) {
    if (!wanted.count(id)) continue;
    Check v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    all &= v.pass;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
  }
  return all ? 0 : 1;
}
