#pragma once

#include <vector>

#include "normsim/core/error.hpp"
#include "normsim/core/rng.hpp"
#include "normsim/env/world.hpp"

namespace normsim {

struct ComplianceConfig {
  enum class Kind : std::uint8_t { Threshold, Sample };
  Kind kind = Kind::Threshold;
  double theta = 0.95;
  int period = 10;  // K, Sample mode only

  void validate() const {
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("compliance threshold must lie in (0,1)");
    if (period < 1) throw ConfigError("sample period must be at least 1");
  }
};

/// Norms whose belief reaches the threshold. `beliefs` is indexed by norm bit.
inline NormMask threshold_set(const std::vector<double>& beliefs, double theta) {
  NormMask m;
  for (std::size_t b = 0; b < beliefs.size(); ++b)
    if (beliefs[b] >= theta) m.set(b);
  return m;
}

/// Chooses the norms an agent complies with. Threshold mode is stateless;
/// Sample mode draws each norm with its belief probability on steps that are
/// multiples of the period (or on first use) and holds the draw otherwise.
class ComplianceSelector {
 public:
  explicit ComplianceSelector(ComplianceConfig cfg = {}) : cfg_(cfg) {}

  NormMask select(const std::vector<double>& beliefs, int step, Rng& rng) {
    if (cfg_.kind == ComplianceConfig::Kind::Threshold) return threshold_set(beliefs, cfg_.theta);
    if (!drawn_ || step % cfg_.period == 0) {
      held_.clear();
      for (std::size_t b = 0; b < beliefs.size(); ++b)
        if (rng.uniform() < beliefs[b]) held_.set(b);
      drawn_ = true;
    }
    return held_;
  }

  const ComplianceConfig& config() const noexcept { return cfg_; }

 private:
  ComplianceConfig cfg_;
  NormMask held_;
  bool drawn_ = false;
};

}  // namespace normsim
