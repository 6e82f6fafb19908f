#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "normsim/core/error.hpp"
#include "normsim/env/world.hpp"

namespace normsim {

/// log of the Boltzmann probability of action `a` under action values `q`.
template <std::size_t N>
double boltzmann_log_likelihood(const std::array<double, N>& q, std::size_t a, double temperature = 1.0) {
  double m = q[0];
  for (double x : q) m = std::max(m, x);
  double z = 0.0;
  for (double x : q) z += std::exp((x - m) / temperature);
  return (q[a] - m) / temperature - std::log(z);
}

template <std::size_t N>
double boltzmann_likelihood(const std::array<double, N>& q, std::size_t a, double temperature = 1.0) {
  return std::exp(boltzmann_log_likelihood(q, a, temperature));
}

inline double logistic(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) noexcept {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return std::log(p) - std::log1p(-p);
}

/// Likelihood of a hypothesis whose applicability depends on the observer's
/// recognised prohibitions (obligations triggered by OtherViolated).
struct ObserverDependent {
  std::size_t bit = 0;
  bool other_pre = false;   // the rest of Pre holds for the observed agent
  NormMask violations;      // prohibitions the other agents broke last step
  double log_l = 0.0;       // log-likelihood when the obligation applies
};

/// The evidence one observed action carries about each norm: log L_nu per
/// norm bit, and log L_empty for the norm-free hypothesis.
struct Observation {
  AgentId agent = -1;
  double log_l0 = 0.0;
  std::vector<double> log_l;
  std::vector<ObserverDependent> dependent;
};

/// Mean-field posterior over norms, stored as independent log-odds.
class BeliefVector {
 public:
  BeliefVector() = default;
  BeliefVector(std::size_t n, double prior) : logit_(n, logit(prior)) {
    if (!(prior >= 0.0 && prior <= 1.0)) throw ConfigError("prior must lie in [0,1]");
  }
  explicit BeliefVector(const std::vector<double>& priors) {
    for (double p : priors) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("prior must lie in [0,1]");
      logit_.push_back(logit(p));
    }
  }

  std::size_t size() const noexcept { return logit_.size(); }
  double probability(std::size_t bit) const { return logistic(logit_.at(bit)); }
  std::vector<double> probabilities() const {
    std::vector<double> out(logit_.size());
    for (std::size_t b = 0; b < logit_.size(); ++b) out[b] = logistic(logit_[b]);
    return out;
  }
  double log_odds(std::size_t bit) const { return logit_.at(bit); }

  /// Two-hypothesis Bayes update of one norm: P' = L P / (L P + L0 (1 - P)).
  void update(std::size_t bit, double log_l, double log_l0) {
    double& x = logit_.at(bit);
    if (std::isinf(x)) return;  // certain beliefs stay put
    x = std::clamp(x + (log_l - log_l0), -kClamp, kClamp);
  }

  NormMask at_least(double theta) const {
    NormMask m;
    for (std::size_t b = 0; b < logit_.size(); ++b)
      if (logistic(logit_[b]) >= theta) m.set(b);
    return m;
  }

 private:
  static constexpr double kClamp = 700.0;
  std::vector<double> logit_;
};

/// An agent's norm learner. Experienced agents are frozen and ignore evidence.
class NormLearner {
 public:
  NormLearner(AgentId self, BeliefVector beliefs, double theta, bool frozen)
      : self_(self), beliefs_(std::move(beliefs)), theta_(theta), frozen_(frozen) {}

  /// Applies one observed action of another agent to every norm.
  void observe(const Observation& obs) {
    if (frozen_ || obs.agent == self_) return;
    const NormMask recognised = beliefs_.at_least(theta_);
    std::vector<double> log_l = obs.log_l;
    for (const auto& d : obs.dependent)
      log_l[d.bit] = d.other_pre && d.violations.intersects(recognised) ? d.log_l : obs.log_l0;
    for (std::size_t b = 0; b < beliefs_.size() && b < log_l.size(); ++b) beliefs_.update(b, log_l[b], obs.log_l0);
  }

  AgentId self() const noexcept { return self_; }
  bool frozen() const noexcept { return frozen_; }
  const BeliefVector& beliefs() const noexcept { return beliefs_; }
  double theta() const noexcept { return theta_; }

 private:
  AgentId self_;
  BeliefVector beliefs_;
  double theta_;
  bool frozen_;
};

}  // namespace normsim
