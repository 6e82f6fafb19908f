#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <vector>

#include "normsim/env/dynamics.hpp"
#include "normsim/planning/reward.hpp"

namespace normsim {

/// The planning agent's view of a state: shared resources plus its own
/// attributes. Other agents are frozen in place for the whole rollout.
struct PlanState {
  Resources res;
  AgentState self;
};

struct StateKey {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  friend bool operator==(const StateKey&, const StateKey&) = default;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const noexcept {
    return static_cast<std::size_t>(splitmix64(k.hi ^ splitmix64(k.lo)));
  }
};

enum class PlanMode : std::uint8_t { Reward, Obligation };

/// Egocentric keys abstract the state to what matters locally; exact keys
/// fingerprint the full planning state (used on small enumerable worlds).
enum class KeyMode : std::uint8_t { Egocentric, Exact };

/// What the obligation's Post asks for; selects the distance heuristic.
enum class PostKind : std::uint8_t { Generic, Clean, Pay, Sanction };

inline PostKind classify_post(const CompiledCondition& c) noexcept {
  const bool state_free = !c.needs_cell && c.facing < 0 && c.role < 0 && c.unpaid_above == INT_MIN && !c.other &&
                          std::isinf(c.dirt_above) && !c.never;
  const int markers = int(c.cleaned) + int(c.paid) + int(c.sanctioned);
  if (!state_free || markers != 1) return PostKind::Generic;
  return c.cleaned ? PostKind::Clean : c.paid ? PostKind::Pay : PostKind::Sanction;
}

/// Reward-oriented problem (norm-penalised base reward) or obligation-oriented
/// problem (shortest path to Post with action and violation costs; states
/// satisfying Post are terminal and entering one pays 1).
struct ProblemSpec {
  PlanMode mode = PlanMode::Reward;
  std::vector<CompiledProhibition> prohibitions;
  CompiledCondition post;  // obligation mode only
  KeyMode keys = KeyMode::Egocentric;
  /// Drop apples from the reward heuristic that the prohibitions make
  /// worthless at the root. Off keeps the norm-free heuristic, so values from
  /// a norm-free table remain consistent upper bounds.
  bool exclusions = true;
  /// Key features the prohibitions depend on (dirt level, unpaid steps). Off
  /// keys exactly like the norm-free problem, so its tables can be shared.
  bool norm_keys = true;
};

class GridProblem {
 public:
  using State = PlanState;
  using Key = StateKey;
  using KeyHash = StateKeyHash;
  using Event = DynamicsEvent;
  static constexpr std::size_t kActions = kNumActions;
  static constexpr int kWindowRadius = 3;

  GridProblem(const WorldState& world, AgentId self, const EnvParams& env, ProblemSpec spec, double gamma = 0.9)
      : layout_(world.layout.get()), env_(env), spec_(std::move(spec)), gamma_(gamma), self_(self) {
    for (const auto& a : world.agents) {
      if (a.id == self || !a.alive) continue;
      others_.push_back(a.pos);
      blocked_.set(static_cast<std::size_t>(a.pos));
    }
    root_.res = world.res;
    root_.self = world.agents.at(static_cast<std::size_t>(self));
    root_.self.clear_markers();
    post_kind_ = spec_.mode == PlanMode::Obligation ? classify_post(spec_.post) : PostKind::Generic;
    track_unpaid_ = spec_.post.unpaid_above != INT_MIN;
    // Reward-mode values hardly depend on dirt, and keying on it makes every
    // Clean lead to a rarely seen, optimistically valued key.
    track_dirt_ = spec_.mode == PlanMode::Obligation;
    if (spec_.norm_keys)
      for (const auto& p : spec_.prohibitions) {
        track_unpaid_ |= p.post.unpaid_above != INT_MIN;
        track_dirt_ |= !std::isinf(p.post.dirt_above);
      }
    track_other_ = post_kind_ == PostKind::Pay || post_kind_ == PostKind::Sanction;
    const Layout& L = *layout_;
    xs_.resize(static_cast<std::size_t>(L.cells()));
    ys_.resize(xs_.size());
    for (CellIndex c = 0; c < L.cells(); ++c) {
      xs_[static_cast<std::size_t>(c)] = L.x_of(c);
      ys_[static_cast<std::size_t>(c)] = L.y_of(c);
    }
    powers_.resize(xs_.size() + static_cast<std::size_t>(L.width + L.height) + 1);
    double g = 1.0;
    for (double& x : powers_) {
      x = g;
      g *= gamma_;
    }
    compute_exclusions();
  }

  const State& root() const noexcept { return root_; }
  const ProblemSpec& spec() const noexcept { return spec_; }
  const Layout& layout() const noexcept { return *layout_; }
  const EnvParams& env() const noexcept { return env_; }

  StateFeatures features(const State& s, CellIndex cell) const {
    StateFeatures f;
    f.cell = cell;
    if (cell != kNoCell) {
      f.cell_apple = s.res.apples.test(cell) || (s.self.ate && s.self.entered == cell);
      f.cell_foreign = foreign_to(*layout_, cell, self_);
      f.cell_around = apples_around(*layout_, s.res.apples, cell);
    }
    f.dirt = dirt_fraction(*layout_, s.res);
    f.facing = s.self.facing;
    f.role = s.self.role;
    f.unpaid = s.self.steps_unpaid;
    f.cleaned = s.self.cleaned;
    f.paid = s.self.paid;
    f.sanctioned = s.self.sanctioned;
    return f;
  }

  bool terminal(const State& s) const {
    return spec_.mode == PlanMode::Obligation && spec_.post.holds(features(s, s.self.entered));
  }

  Event sample(Rng& rng) const { return sample_dynamics(*layout_, env_, rng); }

  /// Own action applied with every other agent idle, then environment
  /// dynamics driven by `ev`. Returns the problem's reward.
  double transition(const State& s, std::size_t ai, const Event& ev, State& out) const {
    out = s;
    AgentState& me = out.self;
    me.clear_markers();
    const ActionKind a = action_at(ai);
    double base = 0.0;
    const Layout& L = *layout_;
    if (is_move(a)) {
      me.facing = move_direction(a);
      const CellIndex t = move_target(L, me.pos, a);
      if (t != kNoCell && !blocked_.test(static_cast<std::size_t>(t))) {
        me.pos = t;
        me.entered = t;
        if (out.res.apples.test(t)) {
          out.res.apples.reset(t);
          note_apple_removed(L, out.res, t);
          me.ate = true;
          base += env_.apple_reward;
        }
      }
    } else if (a == ActionKind::Clean) {
      me.cleaned = clean_ahead(L, out.res, me.pos, me.facing, env_.clean_range);
    } else if (a == ActionKind::Pay) {
      for (CellIndex o : others_)
        if (adjacent4(L, me.pos, o)) {
          me.paid = true;
          base -= env_.pay_amount;
          break;
        }
    } else if (a == ActionKind::Sanction) {
      me.sanctioned = !others_.empty();
    }
    const double cost = a == ActionKind::Noop ? 0.0 : env_.action_cost;
    const CellIndex here = me.pos;
    apply_dynamics(L, env_, out.res, ev,
                   [&](CellIndex c) { return c == here || blocked_.test(static_cast<std::size_t>(c)); });
    me.steps_unpaid = me.paid ? 0 : me.steps_unpaid + 1;
    ++me.age;

    const StateFeatures f = features(out, me.entered);
    const double penalty = violation_penalty(spec_.prohibitions, a, f);
    if (watch_)
      for (const auto& p : *watch_)
        if (p.violated(a, f)) watched_->set(bit_of(p.id));
    if (spec_.mode == PlanMode::Reward) return base - cost - penalty;
    return -cost - penalty + (spec_.post.holds(f) ? 1.0 : 0.0);
  }

  Key key(const State& s) const {
    return spec_.keys == KeyMode::Exact ? exact_key(s) : egocentric_key(s);
  }

  double heuristic(const State& s) const {
    return spec_.mode == PlanMode::Reward ? apple_bound(s) : std::pow(gamma_, steps_lower_bound(s) - 1);
  }

  /// Records, into `sink`, every prohibition of `list` that any evaluated
  /// transition would violate. Both must outlive the problem's use.
  void watch(const std::vector<CompiledProhibition>* list, NormMask* sink) noexcept {
    watch_ = list;
    watched_ = sink;
  }

  /// Apples left out of the reward heuristic because eating them at the root
  /// would cost at least the apple's worth.
  const CellBits& excluded() const noexcept { return excluded_; }

 private:
  void compute_exclusions() {
    if (spec_.prohibitions.empty() || !spec_.exclusions) return;
    root_.res.apples.for_each([&](std::size_t c) {
      StateFeatures f = features(root_, static_cast<CellIndex>(c));
      f.cell_apple = true;
      f.unpaid += 1;
      double worst = 0.0;
      for (std::size_t k = 0; k < kNumActions; ++k) {
        if (!is_move(action_at(k))) continue;
        worst = std::max(worst, violation_penalty(spec_.prohibitions, action_at(k), f));
      }
      if (worst >= env_.apple_reward) excluded_.set(c);
    });
  }

  /// Upper bound on discounted apple income: the k-th nearest apple at
  /// distance d cannot be eaten before step max(d, k).
  double apple_bound(const State& s) const {
    // Successors that leave position and apples alone (Noop, Clean, Pay,
    // Sanction, blocked moves) share one bound.
    if (bound_memo_.valid && bound_memo_.pos == s.self.pos && bound_memo_.apples == s.res.apples) return bound_memo_.v;
    bound_memo_ = {true, s.self.pos, s.res.apples, apple_bound_uncached(s)};
    return bound_memo_.v;
  }

  double apple_bound_uncached(const State& s) const {
    const Layout& L = *layout_;
    constexpr int kCap = 2 * 64 + 1;
    const int cap = std::min(L.width + L.height, kCap);
    int counts[kCap + 1] = {};
    const int px = L.x_of(s.self.pos), py = L.y_of(s.self.pos);
    bool any = false;
    s.res.apples.for_each([&](std::size_t c) {
      if (excluded_.test(c)) return;
      ++counts[std::min(std::abs(xs_[c] - px) + std::abs(ys_[c] - py), cap)];
      any = true;
    });
    if (!any) return 0.0;
    double v = 0.0;
    int k = 1;
    for (int d = 0; d <= cap; ++d)
      for (int m = 0; m < counts[d]; ++m, ++k) v += powers_[static_cast<std::size_t>(std::max(d, k) - 1)];
    return v * env_.apple_reward;
  }

  int steps_lower_bound(const State& s) const {
    const Layout& L = *layout_;
    switch (post_kind_) {
      case PostKind::Clean: {
        // One step if a dirty cell is ahead within range, two if it is in
        // line but behind or beside, else walk into range first.
        const int px = L.x_of(s.self.pos), py = L.y_of(s.self.pos);
        int best = INT_MAX;
        s.res.dirt.for_each([&](std::size_t c) {
          const int cx = L.x_of(static_cast<CellIndex>(c)), cy = L.y_of(static_cast<CellIndex>(c));
          const int d = std::abs(cx - px) + std::abs(cy - py);
          int steps = std::max(2, d - env_.clean_range + 1);
          if ((cx == px || cy == py) && d <= env_.clean_range) {
            const Orientation towards = cx > px   ? Orientation::East
                                        : cx < px ? Orientation::West
                                        : cy > py ? Orientation::South
                                                  : Orientation::North;
            steps = towards == s.self.facing ? 1 : 2;
          }
          best = std::min(best, steps);
        });
        return best == INT_MAX ? 1 + L.width + L.height : best;
      }
      case PostKind::Pay: {
        int best = INT_MAX;
        for (CellIndex o : others_) best = std::min(best, std::max(0, L.manhattan(s.self.pos, o) - 1) + 1);
        return best == INT_MAX ? 1 + L.width + L.height : best;
      }
      default: return 1;
    }
  }

  Key egocentric_key(const State& s) const {
    const Layout& L = *layout_;
    const int px = L.x_of(s.self.pos), py = L.y_of(s.self.pos);
    constexpr int side = 2 * kWindowRadius + 1;
    std::uint64_t window = 0;
    const int x0 = std::max(0, px - kWindowRadius), x1 = std::min(L.width - 1, px + kWindowRadius);
    for (int dy = -kWindowRadius; dy <= kWindowRadius && x0 <= x1; ++dy) {
      const int y = py + dy;
      if (y < 0 || y >= L.height) continue;
      const auto pos = static_cast<std::size_t>(y * L.width + x0), len = static_cast<std::size_t>(x1 - x0 + 1);
      std::uint64_t row = s.res.apples.extract(pos, len);
      if (track_dirt_) row |= s.res.dirt.extract(pos, len);
      window |= row << ((dy + kWindowRadius) * side + x0 - (px - kWindowRadius));
    }
    const int n_river = static_cast<int>(L.river_cells.size());
    const std::uint64_t dirt_bucket =
        n_river == 0 || !track_dirt_ ? 0 : static_cast<std::uint64_t>((20 * s.res.dirt_count + n_river - 1) / n_river);
    const std::uint64_t unpaid = track_unpaid_ ? static_cast<std::uint64_t>(std::min(7, (s.self.steps_unpaid + 4) / 5)) : 0;
    // Markers are left out: they only decide termination, checked before lookup.
    Key k;
    k.lo = window | static_cast<std::uint64_t>(s.self.facing) << 49 | dirt_bucket << 51 | unpaid << 56;
    k.hi = static_cast<std::uint64_t>(s.self.pos);
    if (track_other_) {
      int best = INT_MAX, bx = 0, by = 0;
      for (CellIndex o : others_) {
        const int d = L.manhattan(s.self.pos, o);
        if (d < best) {
          best = d;
          bx = std::clamp(L.x_of(o) - px, -15, 15);
          by = std::clamp(L.y_of(o) - py, -15, 15);
        }
      }
      k.hi |= static_cast<std::uint64_t>(bx + 16) << 12 | static_cast<std::uint64_t>(by + 16) << 17 | std::uint64_t{1} << 22;
    }
    return k;
  }

  Key exact_key(const State& s) const {
    std::uint64_t a = 0x243f6a8885a308d3ULL, b = 0x13198a2e03707344ULL;
    auto mix = [&](std::uint64_t x) {
      a = splitmix64(a ^ x);
      b = splitmix64(b + x * 0x9e3779b97f4a7c15ULL);
    };
    for (auto w : s.res.apples.words()) mix(w);
    for (auto w : s.res.dirt.words()) mix(w);
    mix(static_cast<std::uint64_t>(s.self.pos));
    mix(static_cast<std::uint64_t>(s.self.facing));
    mix(static_cast<std::uint64_t>(track_unpaid_ ? s.self.steps_unpaid : 0));
    mix(std::uint64_t(s.self.cleaned) | std::uint64_t(s.self.paid) << 1 | std::uint64_t(s.self.sanctioned) << 2 |
        std::uint64_t(s.self.ate) << 3 | static_cast<std::uint64_t>(s.self.entered + 1) << 4);
    return {a, b};
  }

  const Layout* layout_;
  EnvParams env_;
  ProblemSpec spec_;
  double gamma_;
  std::vector<int> xs_, ys_;    // cell coordinates
  std::vector<double> powers_;  // gamma^k
  struct BoundMemo {
    bool valid = false;
    CellIndex pos = kNoCell;
    CellBits apples;
    double v = 0.0;
  };
  mutable BoundMemo bound_memo_;  // not shared across threads: one problem per planner call
  AgentId self_;
  std::vector<CellIndex> others_;
  CellBits blocked_;
  CellBits excluded_;
  State root_;
  PostKind post_kind_ = PostKind::Generic;
  bool track_unpaid_ = false;
  bool track_dirt_ = false;
  bool track_other_ = false;
  const std::vector<CompiledProhibition>* watch_ = nullptr;
  NormMask* watched_ = nullptr;
};

}  // namespace normsim
