#pragma once

#include <vector>

#include "normsim/norms/norm.hpp"

namespace normsim {

/// Threshold grids for the enumerated hypothesis space.
struct GenerationParams {
  std::vector<double> dirt_thresholds{0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6};
  std::vector<Orientation> orientations{Orientation::North, Orientation::East, Orientation::South, Orientation::West};
  std::vector<int> around_thresholds{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> foreign_around_thresholds{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> unpaid_thresholds{10, 15, 20, 25, 30};
  std::vector<Role> roles{Role::Cleaner, Role::Farmer, Role::Egalitarian};
  int clean_tau = 20;
  int pay_tau = 30;
  int sanction_tau = 20;
  bool sanction = true;
};

/// Enumerates the hypothesis space in a fixed order:
/// single-atom move prohibitions (apple, foreign), freeze prohibitions on dirt
/// and on orientation, apple-and-foreign, apple with sparse surroundings,
/// apple-and-foreign with sparse surroundings, clean obligations (dirt outer,
/// role inner), pay obligations (unpaid outer, role inner), and sanction.
inline NormSpace generate_norm_space(const GenerationParams& g = {}) {
  if (g.roles.empty()) throw ConfigError("norm generation: role grid is empty");
  std::vector<Norm> out;
  auto prohibit = [&](ActionMask m, std::vector<Atom> atoms) { out.push_back(ProhibitionNorm{m, {std::move(atoms)}}); };
  auto oblige = [&](std::vector<Atom> pre, Atom post, int tau) {
    out.push_back(ObligationNorm{{std::move(pre)}, {{post}}, tau});
  };

  prohibit(kMoveActions, {Atom::cell_apple()});
  prohibit(kMoveActions, {Atom::cell_foreign()});
  for (double x : g.dirt_thresholds) prohibit(kMoveActions, {Atom::dirt_above(x)});
  for (Orientation o : g.orientations) prohibit(kMoveActions, {Atom::facing_is(o)});
  prohibit(kMoveActions, {Atom::cell_apple(), Atom::cell_foreign()});
  for (int k : g.around_thresholds) prohibit(kMoveActions, {Atom::cell_apple(), Atom::apples_around_below(k)});
  for (int k : g.foreign_around_thresholds)
    prohibit(kMoveActions, {Atom::cell_apple(), Atom::cell_foreign(), Atom::apples_around_below(k)});

  for (double x : g.dirt_thresholds)
    for (Role r : g.roles) oblige({Atom::dirt_above(x), Atom::role_is(r)}, Atom::cleaned(), g.clean_tau);
  for (int k : g.unpaid_thresholds)
    for (Role r : g.roles) oblige({Atom::unpaid_above(k), Atom::role_is(r)}, Atom::paid(), g.pay_tau);
  if (g.sanction) oblige({Atom::other_violated()}, Atom::sanctioned(), g.sanction_tau);

  if (out.empty()) throw ConfigError("norm generation: every grid is empty");
  return NormSpace(std::move(out));
}

}  // namespace normsim
