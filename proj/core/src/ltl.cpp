#include "stasmc/ltl.hpp"

#include <algorithm>
#include <cctype>

namespace stasmc::ltl {

namespace {

using Op = Formula::Op;

FormulaPtr make(Op op, std::vector<FormulaPtr> kids = {}, int lo = 0, int hi = 0) {
  auto f = std::make_shared<Formula>();
  f->op = op;
  f->kids = std::move(kids);
  f->lo = lo;
  f->hi = hi;
  return f;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  FormulaPtr formula() {
    FormulaPtr f = implication_level();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + s_.substr(i_, 1) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw LtlError("ltl: " + why + " at offset " + std::to_string(i_) + " in '" + s_ + "'");
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool accept(const std::string& tok) {
    skip();
    if (s_.compare(i_, tok.size(), tok) == 0) {
      i_ += tok.size();
      return true;
    }
    return false;
  }
  // An operator letter (G, F, U) directly followed by '['.
  bool accept_temporal(char c) {
    skip();
    if (i_ + 1 < s_.size() && s_[i_] == c && s_[i_ + 1] == '[') {
      i_ += 1;
      return true;
    }
    return false;
  }
  int number() {
    skip();
    size_t j = i_;
    while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
    if (j == i_) fail("expected a step count");
    int v = std::stoi(s_.substr(i_, j - i_));
    i_ = j;
    return v;
  }
  std::pair<int, int> interval() {
    if (!accept("[")) fail("expected '['");
    int lo = number();
    if (!accept(",")) fail("expected ','");
    int hi = number();
    if (!accept("]")) fail("expected ']'");
    if (lo > hi) fail("empty interval");
    return {lo, hi};
  }
  FormulaPtr implication_level() {
    FormulaPtr l = or_level();
    if (accept("->")) return make(Op::Implies, {l, implication_level()});
    return l;
  }
  FormulaPtr or_level() {
    FormulaPtr l = and_level();
    while (accept("|")) l = make(Op::Or, {l, and_level()});
    return l;
  }
  FormulaPtr and_level() {
    FormulaPtr l = until_level();
    while (accept("&")) l = make(Op::And, {l, until_level()});
    return l;
  }
  FormulaPtr until_level() {
    FormulaPtr l = unary();
    while (accept_temporal('U')) {
      auto [lo, hi] = interval();
      l = make(Op::Until, {l, unary()}, lo, hi);
    }
    return l;
  }
  FormulaPtr unary() {
    if (accept("!")) return make(Op::Not, {unary()});
    if (accept_temporal('G')) {
      auto [lo, hi] = interval();
      return make(Op::Always, {unary()}, lo, hi);
    }
    if (accept_temporal('F')) {
      auto [lo, hi] = interval();
      return make(Op::Eventually, {unary()}, lo, hi);
    }
    if (accept("(")) {
      FormulaPtr f = implication_level();
      if (!accept(")")) fail("expected ')'");
      return f;
    }
    skip();
    size_t j = i_;
    while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_' || s_[j] == '.')) ++j;
    if (j == i_) fail("expected a formula");
    std::string name = s_.substr(i_, j - i_);
    if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') fail("bad name " + name);
    i_ = j;
    if (name == "true") return make(Op::True);
    if (name == "false") return make(Op::False);
    auto a = std::make_shared<Formula>();
    a->op = Op::Atom;
    a->atom = name;
    return a;
  }

  std::string s_;
  size_t i_ = 0;
};

std::string interval(const Formula& f) { return "[" + std::to_string(f.lo) + "," + std::to_string(f.hi) + "]"; }

}  // namespace

FormulaPtr parse(const std::string& text) { return Parser(text).formula(); }

std::string to_string(const Formula& f) {
  auto k = [&](int i) { return to_string(*f.kids[i]); };
  switch (f.op) {
    case Op::True: return "true";
    case Op::False: return "false";
    case Op::Atom: return f.atom;
    case Op::Not: return "!(" + k(0) + ")";
    case Op::And: return "(" + k(0) + " & " + k(1) + ")";
    case Op::Or: return "(" + k(0) + " | " + k(1) + ")";
    case Op::Implies: return "(" + k(0) + " -> " + k(1) + ")";
    case Op::Always: return "G" + interval(f) + " (" + k(0) + ")";
    case Op::Eventually: return "F" + interval(f) + " (" + k(0) + ")";
    case Op::Until: return "(" + k(0) + " U" + interval(f) + " " + k(1) + ")";
  }
  return "?";
}

FormulaPtr atom(const std::string& name) {
  auto a = std::make_shared<Formula>();
  a->op = Op::Atom;
  a->atom = name;
  return a;
}
FormulaPtr negation(FormulaPtr f) { return make(Op::Not, {std::move(f)}); }
FormulaPtr conjunction(FormulaPtr a, FormulaPtr b) { return make(Op::And, {std::move(a), std::move(b)}); }
FormulaPtr implication(FormulaPtr a, FormulaPtr b) { return make(Op::Implies, {std::move(a), std::move(b)}); }
FormulaPtr always(int lo, int hi, FormulaPtr f) { return make(Op::Always, {std::move(f)}, lo, hi); }
FormulaPtr eventually(int lo, int hi, FormulaPtr f) { return make(Op::Eventually, {std::move(f)}, lo, hi); }
FormulaPtr until(int lo, int hi, FormulaPtr p, FormulaPtr q) { return make(Op::Until, {std::move(p), std::move(q)}, lo, hi); }

int horizon(const Formula& f) {
  int h = 0;
  for (const auto& k : f.kids) h = std::max(h, horizon(*k));
  switch (f.op) {
    case Op::Always:
    case Op::Eventually:
    case Op::Until: return f.hi + h;
    default: return h;
  }
}

bool holds(const Formula& f, const BoolTrace& trace, int length, int pos) {
  auto sub = [&](int i, int at) { return holds(*f.kids[i], trace, length, at); };
  switch (f.op) {
    case Op::True: return true;
    case Op::False: return false;
    case Op::Atom: {
      auto it = trace.find(f.atom);
      if (it == trace.end()) throw LtlError("ltl: trace has no signal " + f.atom);
      if (static_cast<int>(it->second.size()) < length) throw LtlError("ltl: signal " + f.atom + " is too short");
      return it->second[pos];
    }
    case Op::Not: return !sub(0, pos);
    case Op::And: return sub(0, pos) && sub(1, pos);
    case Op::Or: return sub(0, pos) || sub(1, pos);
    case Op::Implies: return !sub(0, pos) || sub(1, pos);
    case Op::Always:
      for (int j = pos + f.lo; j <= pos + f.hi && j < length; ++j)
        if (!sub(0, j)) return false;
      return true;
    case Op::Eventually:
      for (int j = pos + f.lo; j <= pos + f.hi && j < length; ++j)
        if (sub(0, j)) return true;
      return false;
    case Op::Until: {
      bool q_seen = false;
      for (int j = pos + f.lo; j <= pos + f.hi && j < length; ++j) {
        bool q = sub(1, j);
        if (!q && !sub(0, j)) return false;
        q_seen = q_seen || q;
      }
      return q_seen;
    }
  }
  return false;
}

}  // namespace stasmc::ltl
