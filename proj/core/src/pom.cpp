#include "stasmc/pom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>

#include "stasmc/csv.hpp"
#include "stasmc/smc.hpp"

namespace stasmc::pom {

namespace {

struct KindName {
  Kind kind;
  const char* name;
};
constexpr KindName kKinds[] = {
    {Kind::Const, "const"},       {Kind::Not, "not"},
    {Kind::And, "and"},           {Kind::Or, "or"},
    {Kind::Implies, "implies"},   {Kind::WithinImplies, "within_implies"},
    {Kind::Extender, "extender"}, {Kind::Detector, "detector"},
    {Kind::Delay, "delay"},       {Kind::Pulse, "pulse"},
    {Kind::Compare, "compare"},   {Kind::Goto, "goto"},
    {Kind::From, "from"},         {Kind::Objective, "objective"},
    {Kind::Assumption, "assumption"},
};

bool is_sink(Kind k) { return k == Kind::Objective || k == Kind::Assumption; }
bool is_register(const Block& b) { return (b.kind == Kind::Delay && b.n >= 1) || b.kind == Kind::Detector; }

std::size_t arity_min(Kind k) {
  switch (k) {
    case Kind::Const: case Kind::Pulse: case Kind::From: return 0;
    case Kind::WithinImplies: case Kind::Implies: return 2;
    default: return 1;
  }
}
std::size_t arity_max(Kind k) {
  switch (k) {
    case Kind::Const: case Kind::Pulse: case Kind::From: return 0;
    case Kind::And: case Kind::Or: return 1u << 20;
    case Kind::WithinImplies: case Kind::Implies: case Kind::Compare: return 2;
    default: return 1;
  }
}

}  // namespace

const char* to_string(Kind k) {
  for (const auto& kn : kKinds)
    if (kn.kind == k) return kn.name;
  return "?";
}

Kind parse_kind(const std::string& s) {
  for (const auto& kn : kKinds)
    if (s == kn.name) return kn.kind;
  throw BlockError("unknown block kind '" + s + "'");
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Valid: return "valid";
    case Status::Counterexample: return "counterexample";
    case Status::BudgetExceeded: return "budget_exceeded";
  }
  return "?";
}

std::string BlockNetwork::add(Block b) {
  if (b.name.empty()) b.name = std::string(to_string(b.kind)) + "_" + std::to_string(blocks.size());
  blocks.push_back(b);
  return b.name;
}

int BlockNetwork::count(Kind k) const {
  return static_cast<int>(std::count_if(blocks.begin(), blocks.end(), [k](const Block& b) { return b.kind == k; }));
}

bool EvalResult::valid() const {
  return std::all_of(objectives.begin(), objectives.end(), [](const ObjectiveReport& o) { return o.first_fail < 0; });
}

// ---- file format ------------------------------------------------------------------

BlockNetwork from_json(const nlohmann::json& j) {
  BlockNetwork n;
  try {
    n.step_ms = j.value("step_ms", 10.0);
    n.inputs = j.value("inputs", std::vector<std::string>{});
    n.numeric_inputs = j.value("numeric_inputs", std::vector<std::string>{});
    for (const auto& jb : j.at("blocks")) {
      Block b;
      b.kind = parse_kind(jb.at("kind").get<std::string>());
      b.name = jb.value("name", std::string());
      b.in = jb.value("in", std::vector<std::string>{});
      switch (b.kind) {
        case Kind::Const: b.value = jb.value("value", 1.0); break;
        case Kind::Extender:
        case Kind::Delay: b.n = jb.at("steps").get<int>(); break;
        case Kind::Detector:
          b.n = jb.at("detect").get<int>();
          b.m = jb.at("hold").get<int>();
          break;
        case Kind::Pulse:
          b.n = jb.at("period").get<int>();
          b.m = jb.value("phase", 0);
          b.width = jb.at("width").get<double>();
          break;
        case Kind::Compare:
          b.rel = parse_relation(jb.at("rel").get<std::string>());
          b.value = jb.value("value", 0.0);
          break;
        case Kind::Goto:
        case Kind::From: b.tag = jb.at("tag").get<std::string>(); break;
        default: break;
      }
      n.add(b);
    }
  } catch (const nlohmann::json::exception& e) {
    throw BlockError(std::string("malformed block network: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw BlockError(e.what());
  }
  return n;
}

nlohmann::json to_json(const BlockNetwork& n) {
  nlohmann::json j;
  j["step_ms"] = n.step_ms;
  j["inputs"] = n.inputs;
  j["numeric_inputs"] = n.numeric_inputs;
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : n.blocks) {
    nlohmann::json jb{{"name", b.name}, {"kind", to_string(b.kind)}};
    if (!b.in.empty()) jb["in"] = b.in;
    switch (b.kind) {
      case Kind::Const: jb["value"] = b.value; break;
      case Kind::Extender:
      case Kind::Delay: jb["steps"] = b.n; break;
      case Kind::Detector:
        jb["detect"] = b.n;
        jb["hold"] = b.m;
        break;
      case Kind::Pulse:
        jb["period"] = b.n;
        jb["phase"] = b.m;
        jb["width"] = b.width;
        break;
      case Kind::Compare:
        jb["rel"] = to_string(b.rel);
        jb["value"] = b.value;
        break;
      case Kind::Goto:
      case Kind::From: jb["tag"] = b.tag; break;
      default: break;
    }
    j["blocks"].push_back(jb);
  }
  return j;
}

BlockNetwork load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw BlockError("cannot open " + path);
  try {
    return from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::parse_error& e) {
    throw BlockError(path + ": " + e.what());
  }
}

void write_trace_csv(std::ostream& os, const StepTrace& t, double step_ms) {
  os << "step,time_ms";
  for (const auto& [name, v] : t.signals) os << ',' << name;
  os << '\n';
  for (int k = 0; k < t.length; ++k) {
    os << k << ',' << csv::num(k * step_ms);
    for (const auto& [name, v] : t.signals) os << ',' << csv::num(v[k]);
    os << '\n';
  }
}

// ---- compilation -------------------------------------------------------------------

Compiled::Compiled(const BlockNetwork& n) : net_(n) {
  std::map<std::string, int> sig;
  auto declare = [&](const std::string& s) {
    if (s.empty()) throw BlockError("empty signal name");
    if (!sig.emplace(s, static_cast<int>(signal_names_.size())).second) throw BlockError("signal " + s + " defined twice");
    signal_names_.push_back(s);
    return sig[s];
  };
  for (const auto& s : n.inputs) input_signals_.push_back(declare(s));
  for (const auto& s : n.numeric_inputs) numeric_signals_.push_back(declare(s));

  // Goto/From pairing: each From reads the input of the single Goto with its tag.
  std::map<std::string, const Block*> gotos;
  std::map<std::string, int> from_uses;
  for (const auto& b : n.blocks) {
    if (b.kind == Kind::Goto && !gotos.emplace(b.tag, &b).second) throw BlockError("duplicate goto tag " + b.tag);
    if (b.kind == Kind::From) ++from_uses[b.tag];
  }
  for (const auto& [tag, g] : gotos)
    if (!from_uses.count(tag)) throw BlockError("goto tag " + tag + " has no from");
  for (const auto& [tag, c] : from_uses)
    if (!gotos.count(tag)) throw BlockError("from tag " + tag + " has no goto");
  std::map<std::string, std::string> alias;  // from output -> goto input
  for (const auto& b : n.blocks)
    if (b.kind == Kind::From) alias[b.name] = gotos.at(b.tag)->in.at(0);

  for (const auto& b : n.blocks) {
    if (b.in.size() < arity_min(b.kind) || b.in.size() > arity_max(b.kind))
      throw BlockError(std::string(to_string(b.kind)) + " block " + b.name + " has " + std::to_string(b.in.size()) +
                       " inputs");
    if (b.kind == Kind::Goto || b.kind == Kind::From || is_sink(b.kind)) continue;
    declare(b.name);
  }
  auto resolve = [&](std::string s) {
    for (int hops = 0; alias.count(s); ++hops) {
      if (hops > static_cast<int>(alias.size())) throw BlockError("goto/from loop through " + s);
      s = alias[s];
    }
    auto it = sig.find(s);
    if (it == sig.end()) throw BlockError("unknown signal " + s);
    return it->second;
  };

  std::vector<Node> nodes;
  std::vector<const Block*> src;
  for (const auto& b : n.blocks) {
    if (b.kind == Kind::Goto || b.kind == Kind::From) continue;
    switch (b.kind) {
      case Kind::Extender:
        if (b.n < 1) throw BlockError("extender " + b.name + " needs at least 1 step");
        break;
      case Kind::Delay:
        if (b.n < 0) throw BlockError("delay " + b.name + " is negative");
        break;
      case Kind::Detector:
        if (b.n < 1 || b.m < 1) throw BlockError("detector " + b.name + " needs positive windows");
        break;
      case Kind::Pulse:
        if (b.n < 1 || b.m < 0 || !(b.width > 0 && b.width < 1))
          throw BlockError("pulse " + b.name + " needs period >= 1, phase >= 0 and width in (0, 1)");
        break;
      default: break;
    }
    Node nd{b.kind, {}, is_sink(b.kind) ? -1 : sig.at(b.name), b.n, b.m, b.width, b.value, b.rel, 0};
    for (const auto& s : b.in) nd.in.push_back(resolve(s));
    nodes.push_back(nd);
    src.push_back(&b);
  }

  // State layout.
  for (auto& nd : nodes) {
    nd.state = state_size_;
    switch (nd.kind) {
      case Kind::Delay: state_size_ += nd.n; break;
      case Kind::Detector: state_size_ += 2; break;
      case Kind::Extender: state_size_ += 1; break;
      case Kind::WithinImplies: state_size_ += 2; break;
      default: break;
    }
  }

  // Order combinational nodes; registers only read state, so edges into
  // them do not constrain the order.
  std::vector<int> producer(signal_names_.size(), -1);
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].out >= 0 && !is_register(*src[i])) producer[nodes[i].out] = static_cast<int>(i);
  std::vector<int> color(nodes.size(), 0), order;
  std::function<void(int)> visit = [&](int u) {
    color[u] = 1;
    for (int s : nodes[u].in) {
      int v = producer[s];
      if (v < 0) continue;
      if (color[v] == 1) throw BlockError("combinational cycle through " + src[v]->name);
      if (color[v] == 0) visit(v);
    }
    color[u] = 2;
    order.push_back(u);
  };
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (is_register(*src[i])) {
      registers_.push_back(nodes[i]);
      continue;
    }
    if (color[i] == 0) visit(static_cast<int>(i));
  }
  for (int u : order) comb_.push_back(nodes[u]);
  // objectives are reported in declaration order
  std::vector<int> objective_src;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == Kind::Objective) objective_src.push_back(static_cast<int>(i));
  for (int i : objective_src) {
    auto pos = std::find(order.begin(), order.end(), i) - order.begin();
    objective_nodes_.push_back(static_cast<int>(pos));
    objective_names_.push_back(src[i]->name);
  }

  // Within-implies blocks feeding each objective, for pending counts.
  std::vector<int> any_producer(signal_names_.size(), -1);
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].out >= 0) any_producer[nodes[i].out] = static_cast<int>(i);
  for (int i : objective_src) {
    std::set<int> seen;
    std::vector<int> stack{i}, within;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      if (!seen.insert(u).second) continue;
      if (nodes[u].kind == Kind::WithinImplies) within.push_back(nodes[u].state);
      for (int s : nodes[u].in)
        if (any_producer[s] >= 0) stack.push_back(any_producer[s]);
    }
    objective_within_.push_back(within);
  }
}

template <class Get>
int Compiled::run(int length, Get&& input, bool keep, EvalResult* res) const {
  std::vector<double> v(signal_names_.size(), 0.0), st(state_size_, 0.0);
  std::vector<int> first(objective_nodes_.size(), -1);
  bool admissible = true;
  bool has_assumption = std::any_of(comb_.begin(), comb_.end(), [](const Node& n) { return n.kind == Kind::Assumption; });
  if (keep) {
    res->trace.length = length;
    for (const auto& s : signal_names_) res->trace.signals[s].assign(length, 0.0);
  }
  int earliest = -1;
  for (int k = 0; k < length; ++k) {
    input(k, v);
    for (const auto& nd : registers_) {
      double* s = st.data() + nd.state;
      if (nd.kind == Kind::Delay) v[nd.out] = k < nd.n ? 0.0 : s[k % nd.n];
      else v[nd.out] = s[1] > 0 ? 1.0 : 0.0;
    }
    for (size_t c = 0; c < comb_.size(); ++c) {
      const Node& nd = comb_[c];
      const double* s = st.data() + nd.state;
      auto in = [&](int i) { return v[nd.in[i]] != 0; };
      double out = 0;
      switch (nd.kind) {
        case Kind::Const: out = nd.value; break;
        case Kind::Not: out = !in(0); break;
        case Kind::And:
          out = 1;
          for (size_t i = 0; i < nd.in.size(); ++i) out = out != 0 && in(static_cast<int>(i));
          break;
        case Kind::Or:
          for (size_t i = 0; i < nd.in.size(); ++i) out = out != 0 || in(static_cast<int>(i));
          break;
        case Kind::Implies: out = !in(0) || in(1); break;
        case Kind::WithinImplies: out = !(s[0] != 0 && !in(0) && s[1] == 0); break;
        case Kind::Extender: out = in(0) || s[0] > 0; break;
        case Kind::Delay: out = v[nd.in[0]]; break;  // zero steps
        case Kind::Pulse:
          out = k >= nd.m && static_cast<double>((k - nd.m) % nd.n) + 1e-9 < nd.width * nd.n;
          break;
        case Kind::Compare: out = compare(v[nd.in[0]], nd.rel, nd.in.size() > 1 ? v[nd.in[1]] : nd.value); break;
        case Kind::Objective:
          if (!in(0)) {
            auto it = std::find(objective_nodes_.begin(), objective_nodes_.end(), static_cast<int>(c));
            auto idx = it - objective_nodes_.begin();
            if (first[idx] < 0) first[idx] = k;
            if (earliest < 0) earliest = k;
          }
          continue;
        case Kind::Assumption:
          if (!in(0)) admissible = false;
          continue;
        default: break;
      }
      v[nd.out] = out;
    }
    if (keep)
      for (size_t i = 0; i < v.size(); ++i) res->trace.signals[signal_names_[i]][k] = v[i];
    if (!res && !admissible) return -2;
    if (!res && earliest >= 0 && !has_assumption) return earliest;
    // state updates
    for (const auto& nd : registers_) {
      double* s = st.data() + nd.state;
      bool x = v[nd.in[0]] != 0;
      if (nd.kind == Kind::Delay) {
        s[k % nd.n] = x;
      } else {  // detector: s[0] run length, s[1] remaining output steps
        s[0] = x ? s[0] + 1 : 0;
        s[1] = s[0] >= nd.n ? nd.m : std::max(0.0, s[1] - 1);
      }
    }
    for (const auto& nd : comb_) {
      double* s = st.data() + nd.state;
      if (nd.kind == Kind::Extender) {
        s[0] = v[nd.in[0]] != 0 ? nd.n - 1 : std::max(0.0, s[0] - 1);
      } else if (nd.kind == Kind::WithinImplies) {
        bool x = v[nd.in[0]] != 0, obs = v[nd.in[1]] != 0;
        if (x) s[1] = ((s[0] != 0 && s[1] != 0) || obs) ? 1 : 0;
        s[0] = x;
      }
    }
  }
  if (res) {
    res->admissible = admissible;
    res->objectives.clear();
    for (size_t i = 0; i < objective_nodes_.size(); ++i) {
      ObjectiveReport r{objective_names_[i], first[i], 0};
      for (int off : objective_within_[i])
        if (st[off] != 0 && st[off + 1] == 0) ++r.pending;
      res->objectives.push_back(r);
    }
  }
  if (!admissible) return -2;
  return earliest;
}

EvalResult Compiled::eval(const StepTrace& inputs, bool keep_signals) const {
  std::vector<const std::vector<double>*> cols;
  auto need = [&](int s) {
    const auto& name = signal_names_[s];
    auto it = inputs.signals.find(name);
    if (it == inputs.signals.end()) throw BlockError("trace lacks input " + name);
    if (static_cast<int>(it->second.size()) < inputs.length) throw BlockError("input " + name + " is too short");
    cols.push_back(&it->second);
  };
  for (int s : input_signals_) need(s);
  for (int s : numeric_signals_) need(s);
  if (inputs.length < 1) throw BlockError("trace must have at least one step");
  EvalResult r;
  run(
      inputs.length,
      [&](int k, std::vector<double>& v) {
        size_t c = 0;
        for (int s : input_signals_) v[s] = (*cols[c++])[k] != 0 ? 1.0 : 0.0;
        for (int s : numeric_signals_) v[s] = (*cols[c++])[k];
      },
      keep_signals, &r);
  return r;
}

std::optional<int> Compiled::first_failure(const std::vector<std::vector<char>>& bits) const {
  int r = run(
      static_cast<int>(bits.size()),
      [&](int k, std::vector<double>& v) {
        for (size_t i = 0; i < input_signals_.size(); ++i) v[input_signals_[i]] = bits[k][i];
      },
      false, nullptr);
  if (r == -2) return std::nullopt;
  return r;
}

EvalResult eval(const BlockNetwork& n, const StepTrace& inputs) { return Compiled(n).eval(inputs); }

// ---- patterns ----------------------------------------------------------------------

namespace {

Block blk(Kind k, std::vector<std::string> in = {}, int n = 0, int m = 0) {
  Block b;
  b.kind = k;
  b.in = std::move(in);
  b.n = n;
  b.m = m;
  return b;
}

void need_steps(int t, const char* what) {
  if (t < 1) throw BlockError(std::string(what) + " must be at least one step");
}

// True on steps 0..t.
std::string window(BlockNetwork& n, int t) {
  Block one = blk(Kind::Const);
  one.value = 1;
  std::string c = n.add(one);
  std::string first = n.add(blk(Kind::Not, {n.add(blk(Kind::Delay, {c}, 1))}));
  return n.add(blk(Kind::Extender, {first}, t + 1));
}

void objective(BlockNetwork& n, const std::string& s) {
  Block b = blk(Kind::Objective, {s});
  b.name = "objective";
  n.add(b);
}

int steps(double ms, double step_ms) { return static_cast<int>(std::lround(ms / step_ms)); }

}  // namespace

BlockNetwork always_within(int t) {
  need_steps(t, "t");
  BlockNetwork n;
  n.inputs = {"p"};
  objective(n, n.add(blk(Kind::Implies, {window(n, t), "p"})));
  return n;
}

BlockNetwork eventually_within(int t) {
  need_steps(t, "t");
  BlockNetwork n;
  n.inputs = {"p"};
  objective(n, n.add(blk(Kind::WithinImplies, {window(n, t), "p"})));
  return n;
}

BlockNetwork until_within(int t) {
  need_steps(t, "t");
  BlockNetwork n;
  n.inputs = {"p", "q"};
  std::string w = window(n, t);
  std::string f = n.add(blk(Kind::WithinImplies, {w, "q"}));
  std::string nq = n.add(blk(Kind::Not, {"q"}));
  std::string g = n.add(blk(Kind::Implies, {n.add(blk(Kind::And, {w, nq})), "p"}));
  objective(n, n.add(blk(Kind::And, {f, g})));
  return n;
}

BlockNetwork response_within(int t) {
  need_steps(t, "t");
  BlockNetwork n;
  n.inputs = {"p", "q"};
  std::string late = n.add(blk(Kind::Delay, {"p"}, t));
  objective(n, n.add(blk(Kind::Implies, {late, n.add(blk(Kind::Extender, {"q"}, t + 1))})));
  return n;
}

BlockNetwork constraint_pattern(const ConstraintSpec& spec, const PatternOptions& o) {
  try {
    spec.check();
  } catch (const std::invalid_argument& e) {
    throw BlockError(e.what());
  }
  if (!(o.step_ms > 0)) throw BlockError("step must be positive");
  BlockNetwork n;
  n.step_ms = o.step_ms;
  auto ms = [&](double v) { return steps(v, o.step_ms); };
  // "a occurred within the previous w steps, excluding now"
  auto recent = [&](const std::string& a, int w) {
    return n.add(blk(Kind::Extender, {n.add(blk(Kind::Delay, {a}, 1))}, w));
  };
  switch (spec.kind) {
    case ConstraintKind::Execution:
    case ConstraintKind::EndToEnd: {
      n.inputs = {spec.in, spec.out};
      int up = ms(spec.upper), lo = ms(spec.lower);
      need_steps(up, "upper");
      std::string ok = n.add(blk(Kind::WithinImplies, {recent(spec.in, up), spec.out}));
      if (o.lower_cut && lo > 0) {
        std::string early = n.add(blk(Kind::And, {spec.out, n.add(blk(Kind::Extender, {spec.in}, lo))}));
        ok = n.add(blk(Kind::And, {ok, n.add(blk(Kind::Not, {early}))}));
      }
      objective(n, ok);
      break;
    }
    case ConstraintKind::Sporadic: {
      n.inputs = {spec.event};
      int m = ms(spec.min);
      need_steps(m, "min");
      if (m == 1) {
        Block one = blk(Kind::Const);
        one.value = 1;
        objective(n, n.add(one));
      } else {
        objective(n, n.add(blk(Kind::Not, {n.add(blk(Kind::And, {spec.event, recent(spec.event, m - 1)}))})));
      }
      break;
    }
    case ConstraintKind::PeriodicCumulative: {
      n.inputs = {spec.event};
      int early = ms(spec.period - spec.jitter), late = ms(spec.period + spec.jitter);
      need_steps(early, "period - jitter");
      std::vector<std::string> parts;
      if (early > 1)
        parts.push_back(n.add(blk(Kind::Not, {n.add(blk(Kind::And, {spec.event, recent(spec.event, early - 1)}))})));
      parts.push_back(
          n.add(blk(Kind::Implies, {n.add(blk(Kind::Delay, {spec.event}, late + 1)), recent(spec.event, late)})));
      objective(n, parts.size() == 1 ? parts[0] : n.add(blk(Kind::And, parts)));
      break;
    }
    case ConstraintKind::PeriodicNoncumulative: {
      n.inputs = {spec.event};
      int t = ms(spec.period), j = ms(spec.jitter);
      if (!(j > 0 && 2 * j < t)) throw BlockError("pulse pattern needs 0 < 2 * jitter < period in steps");
      Block p = blk(Kind::Pulse, {}, t, t - j);
      p.width = 2.0 * j / t;
      objective(n, n.add(blk(Kind::Implies, {spec.event, n.add(p)})));
      break;
    }
    case ConstraintKind::Synchronization: {
      n.inputs = spec.members;
      int tol = ms(spec.tolerance);
      need_steps(tol, "tolerance");
      std::string any = n.add(blk(Kind::Or, spec.members));
      std::string w = n.add(blk(Kind::Extender, {any}, tol + 1));
      std::vector<std::string> parts;
      for (const auto& m : spec.members) parts.push_back(n.add(blk(Kind::WithinImplies, {w, m})));
      objective(n, parts.size() == 1 ? parts[0] : n.add(blk(Kind::And, parts)));
      break;
    }
    case ConstraintKind::Comparison: throw BlockError("comparison constraints have no block pattern");
  }
  return n;
}

BlockNetwork energy_bound(double lower, double upper, double step_ms) {
  if (lower > upper) throw BlockError("energy bound needs lower <= upper");
  BlockNetwork n;
  n.step_ms = step_ms;
  n.numeric_inputs = {"energy"};
  Block lo = blk(Kind::Compare, {"energy"});
  lo.rel = Relation::Ge;
  lo.value = lower;
  Block hi = blk(Kind::Compare, {"energy"});
  hi.rel = Relation::Le;
  hi.value = upper;
  objective(n, n.add(blk(Kind::And, {n.add(lo), n.add(hi)})));
  return n;
}

BlockNetwork build_pattern(const std::string& kind, const nlohmann::json& p) {
  try {
    if (kind == "always_within") return always_within(p.at("t").get<int>());
    if (kind == "eventually_within") return eventually_within(p.at("t").get<int>());
    if (kind == "until_within") return until_within(p.at("t").get<int>());
    if (kind == "response_within") return response_within(p.at("t").get<int>());
    if (kind == "energy_bound")
      return energy_bound(p.at("lower").get<double>(), p.at("upper").get<double>(), p.value("step_ms", 10.0));
    PatternOptions o;
    o.step_ms = p.value("step_ms", 10.0);
    o.lower_cut = p.value("lower_cut", false);
    ConstraintSpec s;
    if (kind == "execution") s = ConstraintSpec::execution(p.at("lower"), p.at("upper"));
    else if (kind == "end_to_end") s = ConstraintSpec::end_to_end(p.at("lower"), p.at("upper"));
    else if (kind == "sporadic") s = ConstraintSpec::sporadic(p.at("min"));
    else if (kind == "periodic_cumulative") s = ConstraintSpec::periodic_cumulative(p.at("period"), p.at("jitter"));
    else if (kind == "periodic_noncumulative")
      s = ConstraintSpec::periodic_noncumulative(p.at("period"), p.at("jitter"));
    else if (kind == "sync" || kind == "synchronization")
      s = ConstraintSpec::synchronization(p.at("tolerance"), p.at("members").get<std::vector<std::string>>());
    else throw BlockError("unknown pattern " + kind);
    return constraint_pattern(s, o);
  } catch (const nlohmann::json::exception& e) {
    throw BlockError("pattern " + kind + ": " + e.what());
  }
}

// ---- bounded verification -------------------------------------------------------------

VerifyResult verify_bounded(const BlockNetwork& n, int horizon, std::uint64_t budget, int jobs) {
  if (horizon < 1) throw BlockError("horizon must be at least one step");
  if (!n.numeric_inputs.empty()) throw BlockError("bounded verification needs boolean inputs only");
  Compiled c(n);
  VerifyResult r;
  const std::uint64_t bits = static_cast<std::uint64_t>(n.inputs.size()) * static_cast<std::uint64_t>(horizon);
  if (bits >= 63 || (std::uint64_t{1} << bits) > budget) {
    r.status = Status::BudgetExceeded;
    return r;
  }
  const std::uint64_t total = std::uint64_t{1} << bits;
  const std::size_t nin = n.inputs.size();
  auto decode = [&](std::uint64_t idx) {
    std::vector<std::vector<char>> b(horizon, std::vector<char>(nin, 0));
    for (int k = 0; k < horizon; ++k)
      for (std::size_t i = 0; i < nin; ++i) b[k][i] = (idx >> (k * nin + i)) & 1;
    return b;
  };
  if (jobs <= 0) jobs = default_jobs();
  const std::uint64_t chunk = 4096;
  const std::uint64_t n_chunks = (total + chunk - 1) / chunk;
  const std::uint64_t wave = static_cast<std::uint64_t>(std::max(1, jobs)) * 4;
  std::optional<std::uint64_t> found;
  for (std::uint64_t w0 = 0; w0 < n_chunks && !found; w0 += wave) {
    std::uint64_t w1 = std::min(n_chunks, w0 + wave);
    std::vector<std::uint64_t> first(w1 - w0, total);
    parallel_for_index(static_cast<long>(w0), static_cast<long>(w1), jobs, [&](long ci) {
      std::uint64_t lo = static_cast<std::uint64_t>(ci) * chunk, hi = std::min(total, lo + chunk);
      for (std::uint64_t idx = lo; idx < hi; ++idx) {
        auto f = c.first_failure(decode(idx));
        if (f && *f >= 0) {
          first[static_cast<std::uint64_t>(ci) - w0] = idx;
          return;
        }
      }
    });
    for (auto f : first)
      if (f < total) {
        found = f;
        break;
      }
    r.traces_checked = found ? *found + 1 : std::min(total, w1 * chunk);
  }
  if (!found) {
    r.status = Status::Valid;
    return r;
  }
  r.status = Status::Counterexample;
  auto b = decode(*found);
  r.counterexample.length = horizon;
  for (std::size_t i = 0; i < nin; ++i) {
    auto& col = r.counterexample.signals[n.inputs[i]];
    for (int k = 0; k < horizon; ++k) col.push_back(b[k][i]);
  }
  EvalResult e = c.eval(r.counterexample, false);
  for (const auto& o : e.objectives)
    if (o.first_fail >= 0 && (r.fail_step < 0 || o.first_fail < r.fail_step)) {
      r.fail_step = o.first_fail;
      r.objective = o.name;
    }
  return r;
}

}  // namespace stasmc::pom
