#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "normsim/sim/episode.hpp"

namespace normsim {

/// Per-step mean and standard error over runs.
struct Series {
  std::vector<double> mean;
  std::vector<double> se;
};

inline constexpr std::array<std::string_view, 7> kMetricNames = {
    "collective_reward", "desiccated_ratio", "dirt_fraction",  "precision",
    "recall",            "arith_mean_top5",  "geo_mean_top5"};

inline double metric_value(const MetricRow& m, std::size_t k) noexcept {
  switch (k) {
    case 0: return m.collective_reward;
    case 1: return m.desiccated_ratio;
    case 2: return m.dirt_fraction;
    case 3: return m.precision;
    case 4: return m.recall;
    case 5: return m.arith_mean_top5;
    default: return m.geo_mean_top5;
  }
}

namespace detail {

/// Running per-step sums for one series.
struct Accumulator {
  std::vector<double> sum, sq;

  void add(std::size_t row, double x) {
    sum[row] += x;
    sq[row] += x * x;
  }
  Series finish(std::size_t n) const {
    Series s;
    s.mean.resize(sum.size());
    s.se.resize(sum.size());
    for (std::size_t r = 0; r < sum.size(); ++r) {
      const double m = n ? sum[r] / static_cast<double>(n) : 0.0;
      s.mean[r] = m;
      if (n > 1) {
        const double var = std::max(0.0, (sq[r] - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
        s.se[r] = std::sqrt(var / static_cast<double>(n));
      }
    }
    return s;
  }
};

}  // namespace detail

/// Summary of one condition over its seeds. Runs are folded in one at a time
/// so their full belief streams need not be kept.
class ConditionAggregate {
 public:
  ConditionAggregate(std::string condition, NormMask active, double theta)
      : condition_(std::move(condition)), active_(active), theta_(theta) {}

  const std::string& condition() const noexcept { return condition_; }
  std::size_t runs() const noexcept { return runs_; }
  int rows() const noexcept { return rows_; }

  void add(const EpisodeResult& r) {
    if (runs_ == 0) {
      rows_ = r.rows();
      norms_ = r.norms;
      const auto n = static_cast<std::size_t>(rows_);
      for (auto& a : metrics_) a = {std::vector<double>(n), std::vector<double>(n)};
      for (NormId id : ids_of(active_)) {
        tracked_.push_back(id);
        learner_.push_back({std::vector<double>(n), std::vector<double>(n)});
        population_.push_back({std::vector<double>(n), std::vector<double>(n)});
        geometric_.push_back({std::vector<double>(n), std::vector<double>(n)});
      }
      final_.assign(static_cast<std::size_t>(norms_), 0.0);
      emergent_.assign(static_cast<std::size_t>(norms_), 0);
    } else if (r.rows() != rows_ || r.norms != norms_) {
      throw ContractViolation("aggregate: runs of one condition differ in length or norm count");
    }
    for (int row = 0; row < rows_; ++row) {
      const auto k = static_cast<std::size_t>(row);
      for (std::size_t m = 0; m < metrics_.size(); ++m) metrics_[m].add(k, metric_value(r.metrics[k], m));
      for (std::size_t i = 0; i < tracked_.size(); ++i) {
        const std::size_t b = bit_of(tracked_[i]);
        learner_[i].add(k, r.mean_belief(row, b, true));
        population_[i].add(k, r.mean_belief(row, b, false));
        geometric_[i].add(k, r.geometric_belief(row, b));
      }
    }
    if (rows_ > 0) {
      const int last = rows_ - 1;
      for (int b = 0; b < norms_; ++b) {
        const auto bit = static_cast<std::size_t>(b);
        final_[bit] += r.mean_belief(last, bit, true);
        if (active_.test(bit)) continue;
        for (AgentId a = 0; a < r.agents; ++a) emergent_[bit] += r.belief(last, a, bit) >= theta_;
      }
    }
    pairs_ += static_cast<std::size_t>(r.agents);
    ++runs_;
  }

  Series metric(std::size_t k) const { return metrics_.at(k).finish(runs_); }
  const std::vector<NormId>& tracked() const noexcept { return tracked_; }
  /// Mean belief of learners in the i-th tracked norm.
  Series learner_belief(std::size_t i) const { return learner_.at(i).finish(runs_); }
  /// Mean belief of the whole population in the i-th tracked norm.
  Series population_belief(std::size_t i) const { return population_.at(i).finish(runs_); }
  Series geometric_belief(std::size_t i) const { return geometric_.at(i).finish(runs_); }

  /// Learners' mean final belief per norm, averaged over runs.
  std::vector<double> final_beliefs() const {
    std::vector<double> out = final_;
    for (double& x : out) x = runs_ ? x / static_cast<double>(runs_) : 0.0;
    return out;
  }

  /// Norms outside the active set ranked by the fraction of (run, agent)
  /// pairs ending at or above the threshold. Ties go to the lower id.
  std::vector<std::pair<NormId, double>> emergent(std::size_t top = 10) const {
    std::vector<std::pair<NormId, double>> out;
    for (int b = 0; b < norms_; ++b) {
      const auto n = emergent_[static_cast<std::size_t>(b)];
      if (n > 0) out.emplace_back(b + 1, static_cast<double>(n) / static_cast<double>(pairs_));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    if (out.size() > top) out.resize(top);
    return out;
  }

 private:
  std::string condition_;
  NormMask active_;
  double theta_;
  std::size_t runs_ = 0, pairs_ = 0;
  int rows_ = 0, norms_ = 0;
  std::array<detail::Accumulator, kMetricNames.size()> metrics_;
  std::vector<NormId> tracked_;
  std::vector<detail::Accumulator> learner_, population_, geometric_;
  std::vector<double> final_;
  std::vector<std::size_t> emergent_;
};

}  // namespace normsim
