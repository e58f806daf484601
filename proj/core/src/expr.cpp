#include "stasmc/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace stasmc {

const char* to_string(ValueKind k) {
  switch (k) {
    case ValueKind::Int: return "int";
    case ValueKind::Bool: return "bool";
    case ValueKind::Real: return "real";
  }
  return "?";
}

namespace expr {
namespace {

enum class Tok { Num, Ident, Punct, End };

struct Token {
  Tok type;
  std::string text;
  double num = 0;
  bool is_real = false;
};

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      size_t j = i;
      bool real = false;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) {
        if (s[j] == '.') real = true;
        ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        real = true;
        ++j;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      Token t{Tok::Num, s.substr(i, j - i)};
      t.num = std::stod(t.text);
      t.is_real = real;
      out.push_back(t);
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      // dotted identifiers: Inst.var, Tmpl.label
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' ||
                              (s[j] == '.' && j + 1 < s.size() &&
                               (std::isalpha(static_cast<unsigned char>(s[j + 1])) || s[j + 1] == '_'))))
        ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i)});
      i = j;
      continue;
    }
    static const char* two[] = {"<=", ">=", "==", "!=", "&&", "||"};
    bool matched = false;
    for (const char* op : two) {
      if (s.compare(i, 2, op) == 0) {
        out.push_back({Tok::Punct, op});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string("+-*/%<>!()[]=").find(c) != std::string::npos) {
      out.push_back({Tok::Punct, std::string(1, c)});
      ++i;
      continue;
    }
    throw ExprError("unexpected character '" + std::string(1, c) + "' in: " + s);
  }
  out.push_back({Tok::End, ""});
  return out;
}

class Parser {
 public:
  Parser(const std::string& src) : src_(src), toks_(lex(src)) {}

  AstPtr expression() { return parse_or(); }

  bool at_end() const { return toks_[pos_].type == Tok::End; }
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_++]; }
  bool accept(const std::string& p) {
    const Token& t = toks_[pos_];
    if ((t.type == Tok::Punct || t.type == Tok::Ident) && t.text == p) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(const std::string& p) {
    if (!accept(p)) throw ExprError("expected '" + p + "' in: " + src_);
  }
  [[noreturn]] void fail(const std::string& why) { throw ExprError(why + " in: " + src_); }

 private:
  static AstPtr bin(Op op, AstPtr l, AstPtr r) {
    auto a = std::make_shared<Ast>();
    a->op = op;
    a->kids = {std::move(l), std::move(r)};
    return a;
  }

  AstPtr parse_or() {
    AstPtr l = parse_and();
    while (accept("||") || accept("or")) l = bin(Op::Or, l, parse_and());
    return l;
  }
  AstPtr parse_and() {
    AstPtr l = parse_eq();
    while (accept("&&") || accept("and")) l = bin(Op::And, l, parse_eq());
    return l;
  }
  AstPtr parse_eq() {
    AstPtr l = parse_rel();
    for (;;) {
      if (accept("==")) l = bin(Op::Eq, l, parse_rel());
      else if (accept("!=")) l = bin(Op::Ne, l, parse_rel());
      else return l;
    }
  }
  AstPtr parse_rel() {
    AstPtr l = parse_add();
    for (;;) {
      if (accept("<=")) l = bin(Op::Le, l, parse_add());
      else if (accept(">=")) l = bin(Op::Ge, l, parse_add());
      else if (accept("<")) l = bin(Op::Lt, l, parse_add());
      else if (accept(">")) l = bin(Op::Gt, l, parse_add());
      else return l;
    }
  }
  AstPtr parse_add() {
    AstPtr l = parse_mul();
    for (;;) {
      if (accept("+")) l = bin(Op::Add, l, parse_mul());
      else if (accept("-")) l = bin(Op::Sub, l, parse_mul());
      else return l;
    }
  }
  AstPtr parse_mul() {
    AstPtr l = parse_unary();
    for (;;) {
      if (accept("*")) l = bin(Op::Mul, l, parse_unary());
      else if (accept("/")) l = bin(Op::Div, l, parse_unary());
      else if (accept("%")) l = bin(Op::Mod, l, parse_unary());
      else return l;
    }
  }
  AstPtr parse_unary() {
    if (accept("!") || accept("not")) {
      auto a = std::make_shared<Ast>();
      a->op = Op::Not;
      a->kids = {parse_unary()};
      return a;
    }
    if (accept("-")) {
      auto a = std::make_shared<Ast>();
      a->op = Op::Neg;
      a->kids = {parse_unary()};
      return a;
    }
    return parse_primary();
  }
  AstPtr parse_primary() {
    Token t = take();
    if (t.type == Tok::Num) {
      auto a = std::make_shared<Ast>();
      a->op = Op::Const;
      a->value = t.num;
      a->kind = t.is_real ? ValueKind::Real : ValueKind::Int;
      return a;
    }
    if (t.type == Tok::Ident) {
      if (t.text == "true" || t.text == "false") {
        auto a = std::make_shared<Ast>();
        a->op = Op::Const;
        a->value = t.text == "true" ? 1 : 0;
        a->kind = ValueKind::Bool;
        return a;
      }
      auto a = std::make_shared<Ast>();
      a->name = t.text;
      if (accept("[")) {
        a->op = Op::Index;
        a->kids = {parse_or()};
        expect("]");
      } else {
        a->op = Op::Ref;
      }
      return a;
    }
    if (t.type == Tok::Punct && t.text == "(") {
      AstPtr e = parse_or();
      expect(")");
      return e;
    }
    fail("unexpected token '" + t.text + "'");
  }

  std::string src_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
};

bool is_numeric(ValueKind k) { return k != ValueKind::Bool; }

}  // namespace

AstPtr parse(const std::string& text) {
  Parser p(text);
  AstPtr e = p.expression();
  if (!p.at_end()) p.fail("trailing input '" + p.peek().text + "'");
  return e;
}

Assignment parse_assignment(const std::string& text) {
  Parser p(text);
  Token t = p.take();
  if (t.type != Tok::Ident) p.fail("assignment must start with a name");
  Assignment a;
  a.target = t.text;
  if (p.accept("[")) {
    a.index = p.expression();
    p.expect("]");
  }
  p.expect("=");
  a.value = p.expression();
  if (!p.at_end()) p.fail("trailing input '" + p.peek().text + "'");
  return a;
}

void collect_names(const Ast& a, std::vector<std::string>& out) {
  if (a.op == Op::Ref || a.op == Op::Index) out.push_back(a.name);
  for (const auto& k : a.kids) collect_names(*k, out);
}

std::string to_text(const Ast& a) {
  auto sym = [](Op op) -> const char* {
    switch (op) {
      case Op::Add: return "+"; case Op::Sub: return "-"; case Op::Mul: return "*";
      case Op::Div: return "/"; case Op::Mod: return "%"; case Op::Lt: return "<";
      case Op::Le: return "<="; case Op::Gt: return ">"; case Op::Ge: return ">=";
      case Op::Eq: return "=="; case Op::Ne: return "!="; case Op::And: return "&&";
      case Op::Or: return "||"; default: return "?";
    }
  };
  switch (a.op) {
    case Op::Const: {
      if (a.kind == ValueKind::Bool) return a.value != 0 ? "true" : "false";
      std::ostringstream os;
      os.precision(17);
      os << a.value;
      std::string s = os.str();
      if (a.kind == ValueKind::Real && s.find_first_of(".e") == std::string::npos) s += ".0";
      return s;
    }
    case Op::Ref: return a.name;
    case Op::Index: return a.name + "[" + to_text(*a.kids[0]) + "]";
    case Op::Neg: return "-(" + to_text(*a.kids[0]) + ")";
    case Op::Not: return "!(" + to_text(*a.kids[0]) + ")";
    default: return "(" + to_text(*a.kids[0]) + " " + sym(a.op) + " " + to_text(*a.kids[1]) + ")";
  }
}

// ---- compilation ----------------------------------------------------------

namespace {

struct Builder {
  const Resolver& resolve;
  std::vector<Node>& nodes;
  const std::string& text;

  [[noreturn]] void fail(const std::string& why) {
    throw ExprError(why + (text.empty() ? "" : " in: " + text));
  }

  int push(Node n) {
    nodes.push_back(n);
    return static_cast<int>(nodes.size()) - 1;
  }

  int build(const Ast& a) {
    switch (a.op) {
      case Op::Const: {
        Node n{Op::Const, a.kind, RefKind::Constant};
        n.value = a.value;
        return push(n);
      }
      case Op::Ref: {
        auto r = resolve(a.name);
        if (!r) fail("unresolved identifier " + a.name);
        if (r->ref == RefKind::GlobalArray) fail("array " + a.name + " used without index");
        if (r->ref == RefKind::Constant) {
          Node n{Op::Const, r->kind, RefKind::Constant};
          n.value = r->value;
          return push(n);
        }
        Node n{Op::Ref, r->kind, r->ref};
        n.inst = r->inst;
        n.slot = r->slot;
        return push(n);
      }
      case Op::Index: {
        auto r = resolve(a.name);
        if (!r) fail("unresolved identifier " + a.name);
        if (r->ref != RefKind::GlobalArray) fail(a.name + " is not an array");
        int idx = build(*a.kids[0]);
        if (nodes[idx].kind != ValueKind::Int) fail("array index must be int");
        Node n{Op::Index, r->kind, RefKind::GlobalArray};
        n.a = idx;
        n.slot = r->slot;
        n.size = r->size;
        return push(n);
      }
      case Op::Neg: {
        int k = build(*a.kids[0]);
        if (!is_numeric(nodes[k].kind)) fail("negation of bool");
        Node n{Op::Neg, nodes[k].kind, RefKind::Constant};
        n.a = k;
        return push(n);
      }
      case Op::Not: {
        int k = build(*a.kids[0]);
        if (nodes[k].kind != ValueKind::Bool) fail("'!' applied to a number");
        Node n{Op::Not, ValueKind::Bool, RefKind::Constant};
        n.a = k;
        return push(n);
      }
      default: break;
    }
    int l = build(*a.kids[0]);
    int r = build(*a.kids[1]);
    ValueKind lk = nodes[l].kind, rk = nodes[r].kind;
    Node n{a.op, ValueKind::Bool, RefKind::Constant};
    n.a = l;
    n.b = r;
    switch (a.op) {
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
        if (!is_numeric(lk) || !is_numeric(rk)) fail("arithmetic on bool");
        n.kind = (lk == ValueKind::Int && rk == ValueKind::Int) ? ValueKind::Int : ValueKind::Real;
        break;
      case Op::Mod:
        if (lk != ValueKind::Int || rk != ValueKind::Int) fail("'%' needs int operands");
        n.kind = ValueKind::Int;
        break;
      case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge:
        if (!is_numeric(lk) || !is_numeric(rk)) fail("ordering comparison on bool");
        break;
      case Op::Eq: case Op::Ne:
        if ((lk == ValueKind::Bool) != (rk == ValueKind::Bool)) fail("comparing bool with number");
        break;
      case Op::And: case Op::Or:
        if (lk != ValueKind::Bool || rk != ValueKind::Bool) fail("logical operator on number");
        break;
      default: fail("bad operator");
    }
    return push(n);
  }
};

}  // namespace

Compiled compile(const Ast& ast, const Resolver& resolve, const std::string& text) {
  Compiled c;
  c.text_ = text.empty() ? to_text(ast) : text;
  Builder b{resolve, c.nodes_, c.text_};
  b.build(ast);
  return c;
}

Compiled compile(const std::string& text, const Resolver& resolve) {
  return compile(*parse(text), resolve, text);
}

Compiled constant(double v, ValueKind k) {
  Compiled c;
  Node n{Op::Const, k, RefKind::Constant};
  n.value = v;
  c.nodes_.push_back(n);
  std::ostringstream os;
  os << v;
  c.text_ = os.str();
  return c;
}

double coerce(double v, ValueKind k) {
  switch (k) {
    case ValueKind::Int: return std::trunc(v);
    case ValueKind::Bool: return v != 0 ? 1.0 : 0.0;
    case ValueKind::Real: return v;
  }
  return v;
}

bool assignable(ValueKind target, ValueKind value) {
  if (target == ValueKind::Bool) return value == ValueKind::Bool;
  if (target == ValueKind::Int) return value == ValueKind::Int;
  return value != ValueKind::Bool;
}

// ---- evaluation -----------------------------------------------------------

double Compiled::eval(const Env& env, double dt) const {
  if (nodes_.empty()) return 1;
  return eval_node(static_cast<int>(nodes_.size()) - 1, env, dt);
}

double Compiled::eval_node(int i, const Env& env, double dt) const {
  const Node& n = nodes_[i];
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Ref:
      switch (n.ref) {
        case RefKind::Global: return env.global(n.slot);
        case RefKind::SelfVar: return env.self_var(n.slot);
        case RefKind::SelfClock:
          return dt == 0 ? env.self_clock(n.slot) : env.self_clock(n.slot) + dt * env.self_clock_rate(n.slot);
        case RefKind::InstVar: return env.inst_var(n.inst, n.slot);
        case RefKind::InstClock:
          return dt == 0 ? env.inst_clock(n.inst, n.slot)
                         : env.inst_clock(n.inst, n.slot) + dt * env.inst_clock_rate(n.inst, n.slot);
        case RefKind::InstAt: return env.inst_at(n.inst, n.slot) ? 1 : 0;
        case RefKind::InstLabel: return env.inst_label(n.inst, n.slot) ? 1 : 0;
        case RefKind::AnyAt: return env.any_at(n.inst, n.slot) ? 1 : 0;
        case RefKind::AnyLabel: return env.any_label(n.inst, n.slot) ? 1 : 0;
        case RefKind::Time: return env.time() + dt;
        default: return n.value;
      }
    case Op::Index: {
      double idx = eval_node(n.a, env, dt);
      if (idx < 0 || idx >= n.size)
        throw ExprError("array index " + std::to_string(static_cast<long long>(idx)) + " out of range in: " + text_);
      return env.global(n.slot + static_cast<int>(idx));
    }
    case Op::Neg: return -eval_node(n.a, env, dt);
    case Op::Not: return eval_node(n.a, env, dt) != 0 ? 0 : 1;
    case Op::And: return (eval_node(n.a, env, dt) != 0 && eval_node(n.b, env, dt) != 0) ? 1 : 0;
    case Op::Or: return (eval_node(n.a, env, dt) != 0 || eval_node(n.b, env, dt) != 0) ? 1 : 0;
    default: break;
  }
  double l = eval_node(n.a, env, dt);
  double r = eval_node(n.b, env, dt);
  switch (n.op) {
    case Op::Add: return l + r;
    case Op::Sub: return l - r;
    case Op::Mul: return l * r;
    case Op::Div:
      if (r == 0) throw ExprError("division by zero in: " + text_);
      return n.kind == ValueKind::Int ? std::trunc(l / r) : l / r;
    case Op::Mod:
      if (r == 0) throw ExprError("modulo by zero in: " + text_);
      return std::fmod(l, r);
    case Op::Lt: return l < r;
    case Op::Le: return l <= r;
    case Op::Gt: return l > r;
    case Op::Ge: return l >= r;
    case Op::Eq: return l == r;
    case Op::Ne: return l != r;
    default: return 0;
  }
}

bool Compiled::affine_node(int i, const Env& env, double dt, double& v, double& s) const {
  const Node& n = nodes_[i];
  switch (n.op) {
    case Op::Const: v = n.value; s = 0; return true;
    case Op::Ref:
      if (n.ref == RefKind::SelfClock) {
        s = env.self_clock_rate(n.slot);
        v = env.self_clock(n.slot) + dt * s;
        return true;
      }
      if (n.ref == RefKind::InstClock) {
        s = env.inst_clock_rate(n.inst, n.slot);
        v = env.inst_clock(n.inst, n.slot) + dt * s;
        return true;
      }
      if (n.ref == RefKind::Time) { v = env.time() + dt; s = 1; return true; }
      v = eval_node(i, env, dt);
      s = 0;
      return true;
    case Op::Index: v = eval_node(i, env, dt); s = 0; return true;
    case Op::Neg:
      if (!affine_node(n.a, env, dt, v, s)) return false;
      v = -v; s = -s;
      return true;
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: {
      double lv, ls, rv, rs;
      if (!affine_node(n.a, env, dt, lv, ls) || !affine_node(n.b, env, dt, rv, rs)) return false;
      if (n.op == Op::Add) { v = lv + rv; s = ls + rs; return true; }
      if (n.op == Op::Sub) { v = lv - rv; s = ls - rs; return true; }
      if (n.op == Op::Mul) {
        if (ls != 0 && rs != 0) return false;
        v = lv * rv;
        s = ls * rv + rs * lv;
        return true;
      }
      if (rs != 0 || rv == 0) return false;
      if (n.kind == ValueKind::Int && ls != 0) return false;
      v = n.kind == ValueKind::Int ? std::trunc(lv / rv) : lv / rv;
      s = ls / rv;
      return true;
    }
    default: return false;  // boolean nodes are not affine
  }
}

std::optional<std::pair<double, double>> Compiled::affine(const Env& env, double dt) const {
  if (nodes_.empty()) return std::nullopt;
  double v, s;
  if (!affine_node(static_cast<int>(nodes_.size()) - 1, env, dt, v, s)) return std::nullopt;
  return std::make_pair(v, s);
}

Compiled Compiled::subtree(int root) const {
  // Copy the nodes reachable from root, preserving post-order.
  std::vector<int> remap(nodes_.size(), -1);
  Compiled out;
  std::function<int(int)> copy = [&](int i) -> int {
    if (i < 0) return -1;
    if (remap[i] >= 0) return remap[i];
    Node n = nodes_[i];
    n.a = copy(n.a);
    n.b = copy(n.b);
    out.nodes_.push_back(n);
    remap[i] = static_cast<int>(out.nodes_.size()) - 1;
    return remap[i];
  };
  copy(root);
  out.text_ = text_;
  return out;
}

std::vector<Compiled> Compiled::conjuncts() const {
  std::vector<Compiled> out;
  if (nodes_.empty()) return out;
  std::function<void(int)> walk = [&](int i) {
    if (nodes_[i].op == Op::And) {
      walk(nodes_[i].a);
      walk(nodes_[i].b);
    } else {
      out.push_back(subtree(i));
    }
  };
  walk(static_cast<int>(nodes_.size()) - 1);
  return out;
}

std::vector<Compiled> Compiled::clock_comparisons() const {
  std::vector<Compiled> out;
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: case Op::Eq: case Op::Ne: break;
      default: continue;
    }
    if (nodes_[n.a].kind == ValueKind::Bool) continue;
    Compiled c = subtree(i);
    if (c.mentions_clock()) out.push_back(std::move(c));
  }
  return out;
}

std::optional<std::pair<Compiled, Op>> Compiled::comparison_difference() const {
  if (nodes_.empty()) return std::nullopt;
  const Node& root = nodes_.back();
  switch (root.op) {
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: case Op::Eq: case Op::Ne: break;
    default: return std::nullopt;
  }
  if (nodes_[root.a].kind == ValueKind::Bool) return std::nullopt;
  Compiled diff = *this;
  Node& r = diff.nodes_.back();
  Op op = r.op;
  r.op = Op::Sub;
  r.kind = ValueKind::Real;
  return std::make_pair(std::move(diff), op);
}

bool Compiled::mentions_clock() const {
  for (const auto& n : nodes_)
    if (n.op == Op::Ref && (n.ref == RefKind::SelfClock || n.ref == RefKind::InstClock || n.ref == RefKind::Time))
      return true;
  return false;
}

}  // namespace expr
}  // namespace stasmc
