#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "normsim/learning/oracle.hpp"
#include "normsim/norms/dsl.hpp"
#include "normsim/norms/generate.hpp"
#include "normsim/planning/agent_planner.hpp"

namespace normsim {

enum class Experiment : std::uint8_t { Passive, Outcomes, Intergen, Emergence };

inline std::string_view to_string(Experiment e) noexcept {
  constexpr std::string_view names[] = {"passive", "outcomes", "intergen", "emergence"};
  return names[static_cast<int>(e)];
}

inline Experiment experiment_from(std::string_view name) {
  for (Experiment e : {Experiment::Passive, Experiment::Outcomes, Experiment::Intergen, Experiment::Emergence})
    if (to_string(e) == name) return e;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

struct AgentSpec {
  Role role = Role::Egalitarian;
  bool experienced = false;
};

/// Everything one episode needs. Shared pieces are immutable and may be
/// referenced by episodes running concurrently.
struct EpisodeConfig {
  std::string condition;
  int horizon = 300;
  std::vector<AgentSpec> agents;
  NormMask active;
  std::optional<int> lifespan;
  double prior = 0.05;
  double theta = 0.95;  // recognition threshold for metrics and Sanction preconditions
  EnvParams env;
  PlannerConfig planner;
  OracleConfig oracle;
  std::shared_ptr<const NormSpace> space;
  std::shared_ptr<const MapDocument> map;
};

/// A parsed experiment document: the shared settings and one episode
/// configuration per condition.
struct ExperimentConfig {
  Experiment experiment = Experiment::Passive;
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeConfig> conditions;
  /// Tolerated violation frequency of the norm prior. Recorded, never used.
  double epsilon = 0.0;
  std::string source;  // document text, hashed into the manifest
};

namespace detail {

using Tree = boost::property_tree::ptree;

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("bad value '" + text + "' for " + key);
  return v;
}

/// Typed reads from one INI section.
class Section {
 public:
  Section(const Tree& root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_)) tree_ = &*child;
  }
  /// Rejects keys that no getter asked for.
  void done() const {
    if (!tree_) return;
    for (const auto& [k, v] : *tree_)
      if (!seen_.count(k)) throw ConfigError("unknown key '" + k + "' in [" + name_ + "]");
  }

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v || v->empty()) return std::nullopt;
    return std::string(*v);
  }
  template <class T>
  void get(const std::string& key, T& out) {
    if (auto v = raw(key)) out = parse_value<T>("[" + name_ + "] " + key, *v);
  }

 private:
  std::string name_;
  const Tree* tree_ = nullptr;
  std::set<std::string> seen_;
};

inline std::vector<Role> parse_roles(const std::string& text) {
  std::vector<Role> roles;
  for (const auto& r : split_list(text)) {
    const auto role = r.size() == 1 ? role_from_char(r[0]) : std::nullopt;
    if (!role) throw ConfigError("unknown role '" + r + "'");
    roles.push_back(*role);
  }
  return roles;
}

inline std::string read_file(const std::filesystem::path& p, const std::string& what) {
  std::ifstream in(p);
  if (!in) throw ConfigError(what + " not found: " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Parses "1..13" or "1,2,5" into a seed list.
inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : detail::split_list(text)) {
    if (auto dots = part.find(".."); dots != std::string::npos) {
      const auto a = detail::parse_value<std::uint64_t>("seeds", part.substr(0, dots));
      const auto b = detail::parse_value<std::uint64_t>("seeds", part.substr(dots + 2));
      if (b < a) throw ConfigError("empty seed range '" + part + "'");
      for (auto s = a; s <= b; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(detail::parse_value<std::uint64_t>("seeds", part));
    }
  }
  if (seeds.empty()) throw ConfigError("no seeds given");
  return seeds;
}

/// Defaults of the experiment protocols before any document overrides.
inline ExperimentConfig default_experiment(Experiment e) {
  ExperimentConfig x;
  x.experiment = e;
  x.seeds = parse_seeds("1..13");
  return x;
}

/// Parses an INI experiment document. Relative paths resolve against `base_dir`.
/// `experiment` selects the protocol; a document naming another one is rejected.
inline ExperimentConfig parse_experiment(const std::string& text, Experiment experiment,
                                         const std::filesystem::path& base_dir = ".") {
  detail::Tree root;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.message(), static_cast<int>(e.line()));
  }
  for (const auto& [k, v] : root)
    if (k != "experiment" && k != "env" && k != "planner" && k != "learner" && k != "norms") {
      if (v.empty()) throw ConfigError("key '" + k + "' outside any section");
      throw ConfigError("unknown section [" + k + "]");
    }

  ExperimentConfig x = default_experiment(experiment);
  x.source = text;
  const bool populated = experiment == Experiment::Intergen;

  std::vector<Role> roles;
  std::vector<bool> experienced;
  switch (experiment) {
    case Experiment::Passive:
    case Experiment::Outcomes:
      roles = {Role::Cleaner, Role::Farmer, Role::Egalitarian, Role::Egalitarian};
      experienced = {true, true, true, false};
      break;
    case Experiment::Intergen:
      for (int i = 0; i < 6; ++i) {
        roles.push_back(static_cast<Role>(i % 3));
        experienced.push_back(i < 3);
      }
      break;
    case Experiment::Emergence:
      roles = {Role::Cleaner, Role::Farmer, Role::Egalitarian};
      experienced = {false, false, false};
      break;
  }
  std::optional<int> horizon;
  std::vector<int> lifespans = {50, 600};
  std::string map_path = populated ? "maps/commons6.map" : "maps/commons.map";
  std::string norms_path;
  std::vector<NormId> active_ids = {17, 14, 54, 32, 34};
  PlannerConfig planner;
  OracleConfig oracle;
  EnvParams env;
  double prior = 0.05, theta = 0.95;
  if (experiment == Experiment::Intergen || experiment == Experiment::Emergence) {
    planner.compliance.kind = ComplianceConfig::Kind::Sample;
    planner.compliance.period = experiment == Experiment::Intergen ? 10 : 15;
  }

  {
    detail::Section s(root, "experiment");
    if (auto v = s.raw("name"); v && experiment_from(*v) != experiment)
      throw ConfigError("config describes experiment '" + *v + "', not '" + std::string(to_string(experiment)) + "'");
    if (auto v = s.raw("seeds")) x.seeds = parse_seeds(*v);
    int h = -1;
    s.get("horizon", h);
    if (h >= 0) horizon = h;
    if (auto v = s.raw("roles")) roles = detail::parse_roles(*v);
    if (auto v = s.raw("experienced")) {
      experienced.clear();
      for (const auto& f : detail::split_list(*v)) experienced.push_back(detail::parse_value<int>("experienced", f) != 0);
    }
    if (auto v = s.raw("lifespans")) {
      lifespans.clear();
      for (const auto& f : detail::split_list(*v)) lifespans.push_back(detail::parse_value<int>("lifespans", f));
    }
    s.done();
  }
  {
    detail::Section s(root, "env");
    if (auto v = s.raw("map")) map_path = *v;
    s.get("regrowth_base", env.regrowth_base);
    s.get("desiccated_multiplier", env.desiccated_multiplier);
    s.get("dirt_spawn_prob", env.dirt_spawn_prob);
    s.get("action_cost", env.action_cost);
    s.get("apple_reward", env.apple_reward);
    s.get("pay_amount", env.pay_amount);
    s.get("clean_range", env.clean_range);
    s.done();
  }
  {
    detail::Section s(root, "planner");
    s.get("gamma", planner.rtdp.gamma);
    s.get("depth", planner.rtdp.depth);
    s.get("trials", planner.rtdp.trials);
    s.get("samples", planner.rtdp.samples);
    s.get("capacity", planner.rtdp.capacity);
    s.get("replan_interval", planner.replan_interval);
    s.get("violation_cost", planner.violation_cost);
    if (auto v = s.raw("compliance")) {
      if (*v == "threshold") planner.compliance.kind = ComplianceConfig::Kind::Threshold;
      else if (*v == "sample") planner.compliance.kind = ComplianceConfig::Kind::Sample;
      else throw ConfigError("unknown compliance mode '" + *v + "'");
    }
    s.get("theta", planner.compliance.theta);
    s.get("period", planner.compliance.period);
    s.done();
  }
  {
    detail::Section s(root, "learner");
    s.get("prior", prior);
    s.get("theta", theta);
    s.get("temperature", oracle.temperature);
    s.get("rollouts", oracle.rollouts);
    s.get("samples", oracle.samples);
    s.get("depth", oracle.depth);
    s.get("epsilon", x.epsilon);
    s.done();
  }
  {
    detail::Section s(root, "norms");
    if (auto v = s.raw("active")) {
      active_ids.clear();
      for (const auto& f : detail::split_list(*v)) active_ids.push_back(detail::parse_value<int>("active", f));
    }
    if (auto v = s.raw("space")) norms_path = *v;
    s.done();
  }

  // Cross-field checks, all before any episode starts.
  if (roles.empty()) throw ConfigError("no agents configured");
  if (experienced.size() != roles.size())
    throw ConfigError("[experiment] experienced lists " + std::to_string(experienced.size()) + " flags for " +
                      std::to_string(roles.size()) + " roles");
  if (!(prior >= 0.0 && prior <= 1.0)) throw ConfigError("prior must lie in [0,1]");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0,1)");
  if (horizon && *horizon < 0) throw ConfigError("horizon must be non-negative");
  for (int l : lifespans)
    if (l < 1) throw ConfigError("lifespans must be positive");
  if (populated && lifespans.empty()) throw ConfigError("intergen needs at least one lifespan");
  planner.validate();
  oracle.gamma = planner.rtdp.gamma;
  oracle.violation_cost = planner.violation_cost;
  oracle.commit_interval = planner.replan_interval;
  oracle.validate();
  if (env.clean_range < 0 || env.regrowth_base < 0 || env.regrowth_base > 1 || env.dirt_spawn_prob < 0 ||
      env.dirt_spawn_prob > 1 || env.desiccated_multiplier < 0)
    throw ConfigError("environment constants out of range");

  auto space = std::make_shared<const NormSpace>(
      norms_path.empty() ? generate_norm_space()
                         : NormSpace(parse_norms(detail::read_file(base_dir / norms_path, "norm file"))));
  NormMask active;
  for (NormId id : active_ids) {
    if (!space->contains(id)) throw ConfigError("active norm " + std::to_string(id) + " is not in the norm space");
    active.set(bit_of(id));
  }
  auto map = std::make_shared<const MapDocument>(
      load_map(detail::read_file(base_dir / map_path, "map file"), static_cast<int>(roles.size())));

  EpisodeConfig base;
  base.horizon = horizon.value_or(300);
  for (std::size_t i = 0; i < roles.size(); ++i) base.agents.push_back({roles[i], experienced[i]});
  base.active = active;
  base.prior = prior;
  base.theta = theta;
  base.env = env;
  base.planner = planner;
  base.oracle = oracle;
  base.space = space;
  base.map = map;

  switch (experiment) {
    case Experiment::Passive:
    case Experiment::Emergence:
      base.condition = std::string(to_string(experiment));
      if (experiment == Experiment::Emergence) base.active.clear();
      x.conditions.push_back(base);
      break;
    case Experiment::Outcomes: {
      EpisodeConfig on = base, off = base;
      on.condition = "norms_active";
      off.condition = "norms_inactive";
      off.active.clear();
      x.conditions = {on, off};
      break;
    }
    case Experiment::Intergen:
      for (int l : lifespans) {
        EpisodeConfig c = base;
        c.condition = "L" + std::to_string(l);
        c.lifespan = l;
        // Three generational cycles: 1.5 M L steps.
        c.horizon = horizon.value_or(static_cast<int>(3 * roles.size() * static_cast<std::size_t>(l) / 2));
        x.conditions.push_back(c);
      }
      break;
  }
  return x;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path, Experiment experiment) {
  return parse_experiment(detail::read_file(path, "config file"), experiment, path.parent_path());
}

}  // namespace normsim
