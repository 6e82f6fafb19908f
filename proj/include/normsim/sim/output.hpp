#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "normsim/sim/aggregate.hpp"

namespace normsim {

inline constexpr std::string_view kEngineVersion = "0.3.0";

/// Fixed six-decimal rendering; the CSVs must be byte-stable.
inline std::string fixed6(double x) {
  if (x == 0.0) x = 0.0;  // folds -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline void write_beliefs_csv(std::ostream& out, const EpisodeResult& r) {
  out << "step,agent_id,norm_id,probability\n";
  for (int row = 0; row < r.rows(); ++row)
    for (AgentId a = 0; a < r.agents; ++a)
      for (int b = 0; b < r.norms; ++b)
        out << r.metrics[static_cast<std::size_t>(row)].step << ',' << a << ',' << b + 1 << ','
            << fixed6(r.belief(row, a, static_cast<std::size_t>(b))) << '\n';
}

inline void write_metrics_csv(std::ostream& out, const EpisodeResult& r) {
  out << "step";
  for (auto name : kMetricNames) out << ',' << name;
  out << '\n';
  for (const auto& m : r.metrics) {
    out << m.step;
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) out << ',' << fixed6(metric_value(m, k));
    out << '\n';
  }
}

inline void write_events_csv(std::ostream& out, const EpisodeResult& r) {
  out << "step,agent_id,kind,norm_id\n";
  for (const auto& e : r.events) out << e.step << ',' << e.agent << ',' << to_string(e.kind) << ',' << e.norm << '\n';
}

inline std::string_view action_name(ActionKind k) noexcept {
  constexpr std::string_view names[] = {"noop", "north", "east", "south", "west", "clean", "pay", "sanction"};
  return names[static_cast<int>(k)];
}

inline void write_trajectory_csv(std::ostream& out, const EpisodeResult& r) {
  out << "step,agent_id,x,y,facing,action,reward,mode,head\n";
  constexpr char facing[] = {'N', 'E', 'S', 'W'};
  for (const auto& t : r.trajectory)
    out << t.step << ',' << t.agent << ',' << t.x << ',' << t.y << ',' << facing[static_cast<int>(t.facing)] << ','
        << action_name(t.action) << ',' << fixed6(t.reward) << ','
        << (t.mode == PlanMode::Reward ? "reward" : "obligation") << ',' << t.head << '\n';
}

namespace detail {

inline nlohmann::json series_json(const Series& s) { return {{"mean", s.mean}, {"se", s.se}}; }

}  // namespace detail

/// Cross-seed summary of every condition. Holds no timings, so reruns match.
inline nlohmann::json summary_json(const ExperimentConfig& x, const std::vector<ConditionAggregate>& conds) {
  nlohmann::json j;
  j["experiment"] = std::string(to_string(x.experiment));
  j["seeds"] = x.seeds;
  j["conditions"] = nlohmann::json::array();
  for (const auto& c : conds) {
    nlohmann::json cj;
    cj["condition"] = c.condition();
    cj["runs"] = c.runs();
    cj["steps"] = c.rows();
    nlohmann::json metrics;
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
      const Series s = c.metric(k);
      nlohmann::json m = detail::series_json(s);
      if (!s.mean.empty()) m["final"] = s.mean.back();
      metrics[std::string(kMetricNames[k])] = std::move(m);
    }
    cj["metrics"] = std::move(metrics);
    nlohmann::json norms = nlohmann::json::array();
    for (std::size_t i = 0; i < c.tracked().size(); ++i)
      norms.push_back({{"norm_id", c.tracked()[i]},
                       {"learner_mean", detail::series_json(c.learner_belief(i))},
                       {"population_mean", detail::series_json(c.population_belief(i))},
                       {"geometric_mean", detail::series_json(c.geometric_belief(i))}});
    cj["active_norms"] = std::move(norms);
    cj["final_learner_beliefs"] = c.final_beliefs();
    nlohmann::json em = nlohmann::json::array();
    for (const auto& [id, frac] : c.emergent(10)) em.push_back({{"norm_id", id}, {"fraction", frac}});
    cj["emergent_top10"] = std::move(em);
    j["conditions"].push_back(std::move(cj));
  }
  return j;
}

struct RunRecord {
  std::string condition;
  std::uint64_t seed = 0;
  std::vector<std::string> files;  // relative to the output directory
  double seconds = 0.0;
};

inline nlohmann::json manifest_json(const ExperimentConfig& x, const std::vector<RunRecord>& runs,
                                    const std::vector<std::string>& shared_files, double total_seconds) {
  nlohmann::json j;
  j["engine_version"] = std::string(kEngineVersion);
  j["experiment"] = std::string(to_string(x.experiment));
  j["config_hash"] = "fnv1a64:" + hex64(fnv1a(x.source));
  j["seeds"] = x.seeds;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : runs)
    j["runs"].push_back({{"condition", r.condition}, {"seed", r.seed}, {"files", r.files}, {"seconds", r.seconds}});
  j["files"] = shared_files;
  j["total_seconds"] = total_seconds;
  return j;
}

}  // namespace normsim
