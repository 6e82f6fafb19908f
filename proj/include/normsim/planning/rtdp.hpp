#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <unordered_map>
#include <vector>

#include "normsim/core/rng.hpp"

namespace normsim {

struct RtdpConfig {
  double gamma = 0.9;
  int depth = 20;
  int trials = 10;
  /// Re-back-up the states of a trial in reverse order once it ends.
  bool backward = true;
  /// Exogenous events averaged per backup. One sample lets a lucky draw
  /// (dirt appearing right ahead) dominate a state's value.
  int samples = 1;
  /// Tables are cleared when they grow past this many entries.
  std::size_t capacity = std::size_t{1} << 18;
};

/// State-keyed V and Q estimates. Reads fall back to an optional parent table,
/// so a short-lived overlay can extend a long-lived base without copying it.
template <class Key, std::size_t N, class Hash = std::hash<Key>>
class ValueTable {
 public:
  struct Entry {
    double v = 0.0;
    std::array<double, N> q{};
  };

  explicit ValueTable(std::size_t capacity = std::size_t{1} << 18) : capacity_(capacity) {}

  const Entry* find(const Key& k) const {
    if (auto it = map_.find(k); it != map_.end()) return &it->second;
    return parent_ ? parent_->find(k) : nullptr;
  }
  /// Local entry for `k`, created on first use from the parent entry or `v0`.
  Entry& upsert(const Key& k, double v0) {
    if (map_.size() >= capacity_) map_.clear();
    auto [it, fresh] = map_.try_emplace(k);
    if (fresh) {
      if (const Entry* p = parent_ ? parent_->find(k) : nullptr) {
        it->second = *p;
      } else {
        it->second.v = v0;
        it->second.q.fill(v0);
      }
    }
    return it->second;
  }

  void set_parent(const ValueTable* parent) noexcept { parent_ = parent; }
  const ValueTable* parent() const noexcept { return parent_; }
  std::size_t size() const noexcept { return map_.size(); }
  void clear() { map_.clear(); }

  /// Copies every local entry into `dst`, overwriting.
  void merge_into(ValueTable& dst) const {
    for (const auto& [k, e] : map_) {
      if (dst.map_.size() >= dst.capacity_) dst.map_.clear();
      dst.map_[k] = e;
    }
  }

 private:
  std::unordered_map<Key, Entry, Hash> map_;
  const ValueTable* parent_ = nullptr;
  std::size_t capacity_;
};

/// Index of a maximal entry, ties broken uniformly.
template <std::size_t N>
std::size_t argmax_uniform(const std::array<double, N>& q, Rng& rng) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t ties = 0, pick = 0;
  for (std::size_t a = 0; a < N; ++a) {
    if (q[a] > best) {
      best = q[a];
      ties = 1;
      pick = a;
    } else if (q[a] == best) {
      ++ties;
    }
  }
  if (ties > 1) {
    std::size_t k = rng.below(ties);
    for (std::size_t a = 0; a < N; ++a)
      if (q[a] == best && k-- == 0) return a;
  }
  return pick;
}

/// Index of a maximal entry, ties resolved by the 64-bit value `u`.
template <std::size_t N>
std::size_t argmax_with(const std::array<double, N>& q, std::uint64_t u) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t ties = 0, pick = 0;
  for (std::size_t a = 0; a < N; ++a) {
    if (q[a] > best) {
      best = q[a];
      ties = 1;
      pick = a;
    } else if (q[a] == best) {
      ++ties;
    }
  }
  if (ties > 1) {
    auto k = static_cast<std::size_t>((static_cast<__uint128_t>(u) * ties) >> 64);
    for (std::size_t a = 0; a < N; ++a)
      if (q[a] == best && k-- == 0) return a;
  }
  return pick;
}

template <std::size_t N>
double max_of(const std::array<double, N>& q) {
  double m = q[0];
  for (std::size_t a = 1; a < N; ++a) m = q[a] > m ? q[a] : m;
  return m;
}

/// Trial-based real-time dynamic programming over a sampled model.
///
/// A Problem provides
///   State, Key, KeyHash, Event, static constexpr std::size_t kActions,
///   Key key(const State&) const,
///   bool terminal(const State&) const,
///   double heuristic(const State&) const,       // value of unseen states
///   Event sample(Rng&) const,                   // exogenous randomness
///   double transition(const State&, std::size_t a, const Event&, State& next) const.
/// Events are drawn per visited state and shared by all actions, so action
/// values differ only through the agent's own choice.
template <class Problem>
class Rtdp {
 public:
  using State = typename Problem::State;
  using Key = typename Problem::Key;
  using Event = typename Problem::Event;
  static constexpr std::size_t N = Problem::kActions;
  using Table = ValueTable<Key, N, typename Problem::KeyHash>;
  using Q = std::array<double, N>;

  explicit Rtdp(RtdpConfig cfg = {}) : cfg_(cfg) {}
  const RtdpConfig& config() const noexcept { return cfg_; }

  double value(const Problem& p, const Table& t, const State& s) const {
    if (p.terminal(s)) return 0.0;
    if (const auto* e = t.find(p.key(s))) return e->v;
    return p.heuristic(s);
  }

  /// One-step lookahead from `s` under event `ev`, without writing.
  Q lookahead(const Problem& p, const Table& t, const State& s, const Event& ev, std::array<State, N>* next = nullptr) const {
    Q q;
    State tmp;
    for (std::size_t a = 0; a < N; ++a) {
      State& n = next ? (*next)[a] : tmp;
      const double r = p.transition(s, a, ev, n);
      q[a] = r + cfg_.gamma * value(p, t, n);
    }
    return q;
  }

  /// Bellman backup at `s`: Q(s,a) = r + gamma V(s'_a) and V(s) = max_a Q(s,a).
  Q backup(const Problem& p, Table& t, const State& s, const Event& ev, std::array<State, N>* next = nullptr) const {
    return store(p, t, s, lookahead(p, t, s, ev, next));
  }

  /// Backup averaged over several events. `next` receives the successors under the first.
  Q backup(const Problem& p, Table& t, const State& s, const std::vector<Event>& evs,
           std::array<State, N>* next = nullptr) const {
    Q q = lookahead(p, t, s, evs.front(), next);
    for (std::size_t i = 1; i < evs.size(); ++i) {
      const Q qi = lookahead(p, t, s, evs[i]);
      for (std::size_t a = 0; a < N; ++a) q[a] += qi[a];
    }
    const double w = 1.0 / static_cast<double>(evs.size());
    for (auto& x : q) x *= w;
    return store(p, t, s, q);
  }

  std::vector<Event> sample_events(const Problem& p, Rng& rng) const {
    std::vector<Event> evs;
    const int k = cfg_.samples < 1 ? 1 : cfg_.samples;
    evs.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) evs.push_back(p.sample(rng));
    return evs;
  }

  /// One greedy rollout. Each depth draws from its own stream, so two
  /// problems planned from the same `rng` state see the same exogenous events
  /// at the same depth even after their paths diverge.
  void trial(const Problem& p, Table& t, const State& root, Rng& rng) const {
    const std::uint64_t stream = rng.next();
    EventCache local;
    EventCache& cache = cache_ ? *cache_ : local;
    std::vector<std::pair<State, const std::vector<Event>*>> path;
    path.reserve(static_cast<std::size_t>(cfg_.depth));
    std::array<State, N> next;
    State s = root;
    for (int d = 0; d < cfg_.depth && !p.terminal(s); ++d) {
      const std::vector<Event>& evs = cache.get(p, *this, stream, d);
      const Q q = backup(p, t, s, evs, &next);
      const std::size_t a = argmax_with(q, derive_seed(stream, {static_cast<std::uint64_t>(d), 1}));
      if (cfg_.backward) path.emplace_back(s, &evs);
      s = next[a];
    }
    if (cfg_.backward)
      for (auto it = path.rbegin(); it != path.rend(); ++it) backup(p, t, it->first, *it->second);
  }

  /// Events of each (trial stream, depth), drawn once and replayed for every
  /// problem that shares the cache. Only problems whose sample() draws alike
  /// (same layout and constants) may share one.
  class EventCache {
   public:
    const std::vector<Event>& get(const Problem& p, const Rtdp& r, std::uint64_t stream, int d) {
      auto& per_depth = map_[stream];
      while (static_cast<int>(per_depth.size()) <= d) {
        Rng local(derive_seed(stream, {static_cast<std::uint64_t>(per_depth.size())}));
        per_depth.push_back(r.sample_events(p, local));
      }
      return per_depth[static_cast<std::size_t>(d)];
    }
    void clear() { map_.clear(); }

   private:
    std::unordered_map<std::uint64_t, std::deque<std::vector<Event>>> map_;  // deque keeps references valid
  };

  /// Shares trial events with other Rtdp instances; nullptr stops sharing.
  void set_cache(EventCache* cache) noexcept { cache_ = cache; }

  void plan(const Problem& p, Table& t, const State& root, Rng& rng) const {
    for (int i = 0; i < cfg_.trials; ++i) trial(p, t, root, rng);
  }

  /// Decision-time action values at `root`: a fresh backup with new events.
  Q q_values(const Problem& p, Table& t, const State& root, Rng& rng) const {
    return backup(p, t, root, sample_events(p, rng));
  }

  /// Largest Bellman residual over the states reached from `root` by the
  /// current greedy policy (first maximiser), up to `max_steps` steps.
  double greedy_residual(const Problem& p, const Table& t, const State& root, Rng& rng, int max_steps) const {
    double worst = 0.0;
    State s = root;
    std::array<State, N> next;
    for (int d = 0; d < max_steps && !p.terminal(s); ++d) {
      const Event ev = p.sample(rng);
      const Q q = lookahead(p, t, s, ev, &next);
      const double m = max_of(q);
      worst = std::max(worst, std::abs(m - value(p, t, s)));
      std::size_t a = 0;
      while (q[a] != m) ++a;
      s = next[a];
    }
    return worst;
  }

  /// Runs trials until the greedy envelope's residual drops below `tol`.
  /// Returns the number of trials used.
  int converge(const Problem& p, Table& t, const State& root, Rng& rng, double tol, int max_trials, int max_steps) const {
    for (int i = 1; i <= max_trials; ++i) {
      trial(p, t, root, rng);
      if (greedy_residual(p, t, root, rng, max_steps) < tol) return i;
    }
    return max_trials;
  }

 private:
  Q store(const Problem& p, Table& t, const State& s, const Q& q) const {
    auto& e = t.upsert(p.key(s), 0.0);
    e.q = q;
    e.v = max_of(q);
    return q;
  }

  RtdpConfig cfg_;
  EventCache* cache_ = nullptr;
};

}  // namespace normsim
