#pragma once

#include <cctype>
#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "normsim/norms/norm.hpp"

// Textual norm syntax, one norm per line:
//
//   PROHIB move IF apple(cell) & foreign(cell)
//   PROHIB north|east IF facing=N
//   OBLIG clean IF dirt>0.3 & role=C WITHIN 20
//   OBLIG (paid) IF unpaid>10 & role=F WITHIN 30
//
// Atoms: apple(cell) foreign(cell) around(cell)<k dirt>x facing=N|E|S|W
// role=C|F|E unpaid>k other_violated cleaned paid sanctioned, and `true` for
// the empty condition. `#` starts a comment.

namespace normsim {

namespace dsl_detail {

inline std::string format_real(double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

class Cursor {
 public:
  Cursor(std::string_view s, int line) : s_(s), line_(line) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size();
  }
  bool accept(std::string_view tok) {
    skip_ws();
    if (s_.substr(pos_, tok.size()) != tok) return false;
    pos_ += tok.size();
    return true;
  }
  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }
  std::string word() {
    skip_ws();
    const std::size_t b = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (b == pos_) fail("expected a word");
    return std::string(s_.substr(b, pos_ - b));
  }
  /// Peeks at the next word without consuming it.
  std::string peek_word() {
    const std::size_t saved = pos_;
    skip_ws();
    std::size_t e = pos_;
    while (e < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[e])) || s_[e] == '_')) ++e;
    std::string w(s_.substr(pos_, e - pos_));
    pos_ = saved;
    return w;
  }
  int integer() {
    skip_ws();
    int v = 0;
    auto r = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (r.ec != std::errc()) fail("expected an integer");
    pos_ = static_cast<std::size_t>(r.ptr - s_.data());
    return v;
  }
  double real() {
    skip_ws();
    double v = 0;
    auto r = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (r.ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(r.ptr - s_.data());
    return v;
  }
  char letter() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of line");
    return s_[pos_++];
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(msg + " at column " + std::to_string(pos_ + 1), line_);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

inline Atom parse_atom(Cursor& c) {
  const std::string w = c.word();
  if (w == "apple" || w == "foreign" || w == "around") {
    c.expect("(");
    c.expect("cell");
    c.expect(")");
    if (w == "apple") return Atom::cell_apple();
    if (w == "foreign") return Atom::cell_foreign();
    c.expect("<");
    return Atom::apples_around_below(c.integer());
  }
  if (w == "dirt") {
    c.expect(">");
    const double x = c.real();
    if (!(x > 0.0 && x < 1.0)) c.fail("dirt threshold must lie in (0,1)");
    return Atom::dirt_above(x);
  }
  if (w == "facing") {
    c.expect("=");
    const auto o = orientation_from_char(c.letter());
    if (!o) c.fail("facing must be one of N, E, S, W");
    return Atom::facing_is(*o);
  }
  if (w == "role") {
    c.expect("=");
    const auto r = role_from_char(c.letter());
    if (!r) c.fail("role must be one of C, F, E");
    return Atom::role_is(*r);
  }
  if (w == "unpaid") {
    c.expect(">");
    return Atom::unpaid_above(c.integer());
  }
  if (w == "other_violated") return Atom::other_violated();
  if (w == "cleaned") return Atom::cleaned();
  if (w == "paid") return Atom::paid();
  if (w == "sanctioned") return Atom::sanctioned();
  c.fail("unknown predicate '" + w + "'");
}

inline Condition parse_condition(Cursor& c) {
  Condition cond;
  if (c.peek_word() == "true") {
    c.word();
    return cond;
  }
  cond.atoms.push_back(parse_atom(c));
  while (c.accept("&")) cond.atoms.push_back(parse_atom(c));
  return cond;
}

inline ActionMask parse_actions(Cursor& c) {
  ActionMask m = 0;
  do {
    const std::string w = c.word();
    if (w == "move") {
      m |= kMoveActions;
      continue;
    }
    std::size_t k = 0;
    while (k < kNumActions && kActionNames[k] != w) ++k;
    if (k == kNumActions) c.fail("unknown action '" + w + "'");
    m |= bit(action_at(k));
  } while (c.accept("|"));
  return m;
}

}  // namespace dsl_detail

inline std::string to_string(const Atom& a) {
  switch (a.kind) {
    case AtomKind::CellApple: return "apple(cell)";
    case AtomKind::CellForeign: return "foreign(cell)";
    case AtomKind::ApplesAroundBelow: return "around(cell)<" + std::to_string(a.count);
    case AtomKind::DirtAbove: return "dirt>" + dsl_detail::format_real(a.level);
    case AtomKind::Facing: return std::string("facing=") + to_char(a.facing);
    case AtomKind::RoleIs: return std::string("role=") + to_char(a.role);
    case AtomKind::UnpaidAbove: return "unpaid>" + std::to_string(a.count);
    case AtomKind::OtherViolated: return "other_violated";
    case AtomKind::Cleaned: return "cleaned";
    case AtomKind::Paid: return "paid";
    case AtomKind::Sanctioned: return "sanctioned";
  }
  return "?";
}

inline std::string to_string(const Condition& c) {
  if (c.atoms.empty()) return "true";
  std::string s;
  for (std::size_t i = 0; i < c.atoms.size(); ++i) {
    if (i) s += " & ";
    s += to_string(c.atoms[i]);
  }
  return s;
}

inline std::string to_string(const Norm& n) {
  if (const auto* p = std::get_if<ProhibitionNorm>(&n)) {
    std::string acts;
    if (p->prohib == kMoveActions) {
      acts = "move";
    } else {
      for (std::size_t k = 0; k < kNumActions; ++k) {
        if (!contains(p->prohib, action_at(k))) continue;
        if (!acts.empty()) acts += "|";
        acts += kActionNames[k];
      }
    }
    return "PROHIB " + acts + " IF " + to_string(p->post);
  }
  const auto& o = std::get<ObligationNorm>(n);
  std::string post;
  if (o.post.atoms.size() == 1 && o.post.atoms[0].kind == AtomKind::Cleaned) post = "clean";
  else if (o.post.atoms.size() == 1 && o.post.atoms[0].kind == AtomKind::Paid) post = "pay";
  else if (o.post.atoms.size() == 1 && o.post.atoms[0].kind == AtomKind::Sanctioned) post = "sanction";
  else post = "(" + to_string(o.post) + ")";
  return "OBLIG " + post + " IF " + to_string(o.pre) + " WITHIN " + std::to_string(o.tau);
}

/// Parses a single norm. `line` is used in error messages.
inline Norm parse_norm(std::string_view text, int line = 0) {
  dsl_detail::Cursor c(text, line);
  const std::string head = c.word();
  if (head == "PROHIB") {
    const ActionMask m = dsl_detail::parse_actions(c);
    c.expect("IF");
    Condition post = dsl_detail::parse_condition(c);
    if (!c.done()) c.fail("trailing input");
    return ProhibitionNorm{m, std::move(post)};
  }
  if (head == "OBLIG") {
    Condition post;
    if (c.accept("(")) {
      post = dsl_detail::parse_condition(c);
      c.expect(")");
    } else {
      const std::string w = c.word();
      if (w == "clean") post.atoms = {Atom::cleaned()};
      else if (w == "pay") post.atoms = {Atom::paid()};
      else if (w == "sanction") post.atoms = {Atom::sanctioned()};
      else c.fail("unknown obligation '" + w + "'");
    }
    c.expect("IF");
    Condition pre = dsl_detail::parse_condition(c);
    c.expect("WITHIN");
    const int tau = c.integer();
    if (tau < 1) c.fail("WITHIN needs a positive step count");
    if (!c.done()) c.fail("trailing input");
    return ObligationNorm{std::move(pre), std::move(post), tau};
  }
  c.fail("expected PROHIB or OBLIG");
}

/// Parses a document of norms, one per line. `first_line` is the line number
/// of the text's first line in the enclosing file.
inline std::vector<Norm> parse_norms(std::string_view text, int first_line = 1) {
  std::vector<Norm> out;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int n = first_line; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_norm(line, n));
  }
  return out;
}

inline std::string to_string(const NormSpace& space) {
  std::string s;
  for (const Norm& n : space.norms()) s += to_string(n) + "\n";
  return s;
}

}  // namespace normsim
