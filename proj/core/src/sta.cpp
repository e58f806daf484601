#include "stasmc/sta.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace stasmc {

const Template* Network::find_template(const std::string& n) const {
  for (const auto& t : templates)
    if (t.name == n) return &t;
  return nullptr;
}

Template* Network::find_template(const std::string& n) {
  for (auto& t : templates)
    if (t.name == n) return &t;
  return nullptr;
}


bool same(const Location& a, const Location& b);
bool same(const Edge& a, const Edge& b);
bool same(const VarDecl& a, const VarDecl& b);
template <class T>
bool same_list(const std::vector<T>& a, const std::vector<T>& b);

bool same(const ClockBound& a, const ClockBound& b) {
  return a.clock == b.clock && a.strict == b.strict && a.bound == b.bound;
}

bool same(const Location& a, const Location& b) {
  if (a.name != b.name || a.rates != b.rates || a.exit_rate != b.exit_rate || a.labels != b.labels ||
      a.invariant.size() != b.invariant.size())
    return false;
  for (size_t i = 0; i < a.invariant.size(); ++i)
    if (!same(a.invariant[i], b.invariant[i])) return false;
  return true;
}

bool same(const Edge& a, const Edge& b) {
  bool spawn_eq = a.spawn.has_value() == b.spawn.has_value() &&
                  (!a.spawn || (a.spawn->tmpl == b.spawn->tmpl && a.spawn->args == b.spawn->args));
  return a.source == b.source && a.target == b.target && a.guard == b.guard && a.sync.kind == b.sync.kind &&
         a.sync.channel == b.sync.channel && a.weight == b.weight && a.updates == b.updates && spawn_eq;
}

bool same(const VarDecl& a, const VarDecl& b) {
  return a.name == b.name && a.kind == b.kind && a.initial == b.initial && a.size == b.size && a.init == b.init;
}

template <class T>
bool same_list(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!same(a[i], b[i])) return false;
  return true;
}

bool same(const Template& a, const Template& b) {
  if (a.name != b.name || a.initial != b.initial || a.spawnable != b.spawnable || a.observer != b.observer)
    return false;
  if (a.params.size() != b.params.size() || a.clocks.size() != b.clocks.size()) return false;
  for (size_t i = 0; i < a.params.size(); ++i)
    if (a.params[i].name != b.params[i].name || a.params[i].kind != b.params[i].kind) return false;
  for (size_t i = 0; i < a.clocks.size(); ++i)
    if (a.clocks[i].name != b.clocks[i].name || a.clocks[i].initial != b.clocks[i].initial) return false;
  return same_list(a.vars, b.vars) && same_list(a.locations, b.locations) && same_list(a.edges, b.edges);
}


bool Network::operator==(const Network& o) const {
  if (channels.size() != o.channels.size() || instances.size() != o.instances.size()) return false;
  for (size_t i = 0; i < channels.size(); ++i)
    if (channels[i].name != o.channels[i].name || channels[i].kind != o.channels[i].kind) return false;
  for (size_t i = 0; i < instances.size(); ++i)
    if (instances[i].name != o.instances[i].name || instances[i].tmpl != o.instances[i].tmpl ||
        instances[i].args != o.instances[i].args)
      return false;
  return same_list(globals, o.globals) && same_list(templates, o.templates);
}

bool ValidationReport::contains(const std::string& fragment) const {
  for (const auto& v : violations)
    if (v.message.find(fragment) != std::string::npos) return true;
  return false;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) {
    if (!v.tmpl.empty()) os << v.tmpl;
    if (v.edge >= 0) os << " edge " << v.edge;
    if (!v.tmpl.empty() || v.edge >= 0) os << ": ";
    os << v.message << "\n";
  }
  return os.str();
}

// ---- Model construction -----------------------------------------------------

struct ModelAccess {
  // Shared between validate() and Model: compiles a network without
  // throwing, recording each failure as a violation.
  static void build(Model& m, ValidationReport& rep);
};

namespace {

std::optional<expr::Resolved> make(expr::RefKind r, ValueKind k, int inst, int slot) {
  expr::Resolved x;
  x.ref = r;
  x.kind = k;
  x.inst = inst;
  x.slot = slot;
  return x;
}

bool in_kind(double v, ValueKind k) {
  if (k == ValueKind::Bool) return v == 0 || v == 1;
  if (k == ValueKind::Int) return v == static_cast<double>(static_cast<long long>(v));
  return true;
}

}  // namespace

int CTemplate::clock_index(const std::string& n) const {
  for (size_t i = 0; i < clock_names.size(); ++i)
    if (clock_names[i] == n) return static_cast<int>(i);
  return -1;
}
int CTemplate::var_index(const std::string& n) const {
  for (size_t i = 0; i < var_names.size(); ++i)
    if (var_names[i] == n) return static_cast<int>(i);
  return -1;
}
int CTemplate::location_index(const std::string& n) const {
  for (size_t i = 0; i < locations.size(); ++i)
    if (locations[i].name == n) return static_cast<int>(i);
  return -1;
}

int Model::template_index(const std::string& n) const {
  auto it = tmpl_index_.find(n);
  return it == tmpl_index_.end() ? -1 : it->second;
}
int Model::instance_index(const std::string& n) const {
  auto it = inst_index_.find(n);
  return it == inst_index_.end() ? -1 : static_ids_[it->second];
}
const std::string* Model::static_name(int id) const {
  long decl = id < kObserverIdBase ? id : static_cast<long>(id) - kObserverIdBase + n_model_static_;
  if (id < 0 || (id < kObserverIdBase && id >= n_model_static_) || decl >= static_cast<long>(static_ids_.size()))
    return nullptr;
  return &net_.instances[decl].name;
}
int Model::channel_index(const std::string& n) const {
  auto it = chan_index_.find(n);
  return it == chan_index_.end() ? -1 : it->second;
}
int Model::label_id(const std::string& label) const {
  for (size_t i = 0; i < label_names_.size(); ++i)
    if (label_names_[i] == label) return static_cast<int>(i);
  return -1;
}

std::optional<expr::Resolved> Model::resolve_global(const std::string& name) const {
  using expr::RefKind;
  if (name == "time") return make(RefKind::Time, ValueKind::Real, -1, 0);
  auto dot = name.find('.');
  if (dot == std::string::npos) {
    auto it = global_index_.find(name);
    if (it == global_index_.end()) return std::nullopt;
    const GlobalSlot& g = globals_[it->second];
    auto r = make(g.size > 0 ? RefKind::GlobalArray : RefKind::Global, g.kind, -1, g.slot);
    r->size = g.size;
    return r;
  }
  std::string head = name.substr(0, dot), tail = name.substr(dot + 1);
  if (tail.find('.') != std::string::npos) return std::nullopt;
  if (auto it = inst_index_.find(head); it != inst_index_.end()) {
    int inst = static_ids_[it->second];
    auto ti = tmpl_index_.find(net_.instances[it->second].tmpl);
    if (ti == tmpl_index_.end() || ti->second >= static_cast<int>(tmpls_.size())) return std::nullopt;
    const CTemplate& t = tmpls_[ti->second];
    if (int c = t.clock_index(tail); c >= 0) return make(RefKind::InstClock, ValueKind::Real, inst, c);
    if (int v = t.var_index(tail); v >= 0) return make(RefKind::InstVar, t.var_kinds[v], inst, v);
    if (int l = t.location_index(tail); l >= 0) return make(RefKind::InstAt, ValueKind::Bool, inst, l);
    if (int lb = label_id(tail); lb >= 0) return make(RefKind::InstLabel, ValueKind::Bool, inst, lb);
    return std::nullopt;
  }
  if (auto it = tmpl_index_.find(head); it != tmpl_index_.end()) {
    const CTemplate& t = tmpls_[it->second];
    if (int l = t.location_index(tail); l >= 0) return make(RefKind::AnyAt, ValueKind::Bool, it->second, l);
    if (int lb = label_id(tail); lb >= 0) return make(RefKind::AnyLabel, ValueKind::Bool, it->second, lb);
  }
  return std::nullopt;
}

std::optional<expr::Resolved> Model::resolve_in(const CTemplate& t, const std::string& name) const {
  using expr::RefKind;
  if (int c = t.clock_index(name); c >= 0) return make(RefKind::SelfClock, ValueKind::Real, -1, c);
  if (int v = t.var_index(name); v >= 0) return make(RefKind::SelfVar, t.var_kinds[v], -1, v);
  return resolve_global(name);
}

expr::Compiled Model::compile_global(const std::string& text) const {
  return expr::compile(text, [this](const std::string& n) { return resolve_global(n); });
}

void ModelAccess::build(Model& m, ValidationReport& rep) {
  const Network& net = m.net_;
  auto add = [&](const std::string& t, int e, const std::string& msg) { rep.violations.push_back({t, e, msg}); };

  for (size_t i = 0; i < net.channels.size(); ++i) {
    if (m.chan_index_.count(net.channels[i].name)) add("", -1, "duplicate channel " + net.channels[i].name);
    m.chan_index_[net.channels[i].name] = static_cast<int>(i);
  }
  for (const auto& g : net.globals) {
    if (m.global_index_.count(g.name)) {
      add("", -1, "duplicate global " + g.name);
      continue;
    }
    GlobalSlot s{g.name, m.n_global_slots_, g.size, g.kind};
    m.global_index_[g.name] = static_cast<int>(m.globals_.size());
    m.globals_.push_back(s);
    int n = std::max(1, g.size);
    for (int k = 0; k < n; ++k) {
      double v = (g.size > 0 && k < static_cast<int>(g.init.size())) ? g.init[k] : g.initial;
      if (!in_kind(v, g.kind)) add("", -1, "initial value of " + g.name + " outside declared kind");
      m.global_init_.push_back(v);
    }
    m.n_global_slots_ += n;
  }
  for (size_t i = 0; i < net.templates.size(); ++i) {
    if (m.tmpl_index_.count(net.templates[i].name)) add("", -1, "duplicate template " + net.templates[i].name);
    m.tmpl_index_[net.templates[i].name] = static_cast<int>(i);
  }
  std::set<std::string> labels;
  for (const auto& t : net.templates)
    for (const auto& l : t.locations) labels.insert(l.labels.begin(), l.labels.end());
  m.label_names_.assign(labels.begin(), labels.end());
  if (m.label_names_.size() > 64) add("", -1, "more than 64 distinct location labels");

  for (size_t i = 0; i < net.instances.size(); ++i) {
    const auto& in = net.instances[i];
    if (m.inst_index_.count(in.name)) add("", -1, "duplicate instance " + in.name);
    m.inst_index_[in.name] = static_cast<int>(i);
    const Template* t = net.find_template(in.tmpl);
    m.static_ids_.push_back(t && t->observer ? kObserverIdBase + (static_cast<int>(i) - m.n_model_static_)
                                             : m.n_model_static_++);
    if (t && !t->observer && m.n_model_static_ - 1 != static_cast<int>(i))
      add("", -1, "instance " + in.name + " of a model template declared after an observer instance");
    if (!t) {
      add("", -1, "instance " + in.name + " of unknown template " + in.tmpl);
    } else if (t->params.size() != in.args.size()) {
      add("", -1, "instance " + in.name + " passes " + std::to_string(in.args.size()) + " arguments, " +
                      in.tmpl + " takes " + std::to_string(t->params.size()));
    }
  }

  // Skeletons first so cross-instance references can resolve.
  m.tmpls_.resize(net.templates.size());
  for (size_t ti = 0; ti < net.templates.size(); ++ti) {
    const Template& t = net.templates[ti];
    CTemplate& c = m.tmpls_[ti];
    c.name = t.name;
    c.spawnable = t.spawnable;
    c.observer = t.observer;
    std::set<std::string> names;
    for (const auto& ck : t.clocks) {
      if (!names.insert(ck.name).second) add(t.name, -1, "duplicate name " + ck.name);
      if (ck.initial < 0) add(t.name, -1, "clock " + ck.name + " has negative initial value");
      c.clock_names.push_back(ck.name);
      c.clock_init.push_back(ck.initial);
    }
    for (const auto& v : t.vars) {
      if (!names.insert(v.name).second) add(t.name, -1, "duplicate name " + v.name);
      if (v.size > 0) add(t.name, -1, "local arrays are not supported: " + v.name);
      if (!in_kind(v.initial, v.kind)) add(t.name, -1, "initial value of " + v.name + " outside declared kind");
      c.var_names.push_back(v.name);
      c.var_kinds.push_back(v.kind);
      c.var_init.push_back(v.initial);
    }
    c.n_locals = static_cast<int>(t.vars.size());
    for (const auto& p : t.params) {
      if (!names.insert(p.name).second) add(t.name, -1, "duplicate name " + p.name);
      c.var_names.push_back(p.name);
      c.var_kinds.push_back(p.kind);
      c.var_init.push_back(0);
    }
    std::set<std::string> locnames;
    for (const auto& l : t.locations) {
      if (!locnames.insert(l.name).second) add(t.name, -1, "duplicate location " + l.name);
      CLocation cl;
      cl.name = l.name;
      cl.exit_rate = l.exit_rate;
      c.locations.push_back(cl);
    }
    c.initial = c.location_index(t.initial);
    if (c.initial < 0) add(t.name, -1, "initial location " + t.initial + " is not a location");
  }

  for (size_t ti = 0; ti < net.templates.size(); ++ti) {
    const Template& t = net.templates[ti];
    CTemplate& c = m.tmpls_[ti];
    auto resolver = [&m, &c](const std::string& n) { return m.resolve_in(c, n); };
    auto try_compile = [&](const std::string& text, int edge, expr::Compiled& out) -> bool {
      try {
        out = expr::compile(text, resolver);
        return true;
      } catch (const ExprError& e) {
        add(t.name, edge, e.what());
        return false;
      }
    };

    for (size_t li = 0; li < t.locations.size(); ++li) {
      const Location& l = t.locations[li];
      CLocation& cl = c.locations[li];
      if (!(l.exit_rate > 0)) add(t.name, -1, "location " + l.name + " has non-positive exit rate");
      for (const auto& lb : l.labels) {
        int id = m.label_id(lb);
        if (id >= 0 && id < 64) cl.labels |= (std::uint64_t{1} << id);
      }
      for (const auto& b : l.invariant) {
        CBound cb;
        cb.clock = c.clock_index(b.clock);
        cb.strict = b.strict;
        if (cb.clock < 0) {
          add(t.name, -1, "invariant of " + l.name + " bounds unknown clock " + b.clock);
          continue;
        }
        if (!try_compile(b.bound, -1, cb.bound)) continue;
        if (cb.bound.mentions_clock() || cb.bound.kind() == ValueKind::Bool) {
          add(t.name, -1, "invariant bound of " + l.name + " must be a clock-free number");
          continue;
        }
        cl.invariant.push_back(std::move(cb));
      }
      cl.rates.resize(c.clock_names.size());
      for (size_t k = 0; k < c.clock_names.size(); ++k) cl.rates[k] = expr::constant(1.0);
      for (const auto& [clk, rate] : l.rates) {
        int k = c.clock_index(clk);
        if (k < 0) {
          add(t.name, -1, "rate of unknown clock " + clk + " in " + l.name);
          continue;
        }
        expr::Compiled r;
        if (!try_compile(rate, -1, r)) continue;
        if (r.mentions_clock() || r.kind() == ValueKind::Bool) {
          add(t.name, -1, "rate of " + clk + " in " + l.name + " must be a clock-free number");
          continue;
        }
        cl.rates[k] = std::move(r);
        const auto& nodes = cl.rates[k].nodes();
        if (!(nodes.size() == 1 && nodes[0].op == expr::Op::Const && nodes[0].value == 1)) cl.all_rates_one = false;
      }
    }

    for (size_t ei = 0; ei < t.edges.size(); ++ei) {
      const Edge& e = t.edges[ei];
      int eidx = static_cast<int>(ei);
      CEdge ce;
      ce.index = eidx;
      ce.source = c.location_index(e.source);
      ce.target = c.location_index(e.target);
      if (ce.source < 0) add(t.name, eidx, "source " + e.source + " is not a location");
      if (ce.target < 0) add(t.name, eidx, "target " + e.target + " is not a location");
      if (!(e.weight > 0)) add(t.name, eidx, "weight must be positive");
      ce.weight = e.weight;
      ce.sync = e.sync.kind;
      if (e.sync.kind != SyncKind::None) {
        auto it = m.chan_index_.find(e.sync.channel);
        if (it == m.chan_index_.end()) {
          add(t.name, eidx, "undeclared channel " + e.sync.channel);
        } else {
          ce.channel = it->second;
          if (t.observer && e.sync.kind == SyncKind::Recv && net.channels[it->second].kind == ChannelKind::Binary)
            add(t.name, eidx, "observer receives on binary channel " + e.sync.channel);
        }
        if (t.observer && e.sync.kind == SyncKind::Send) add(t.name, eidx, "observer sends on " + e.sync.channel);
      }
      if (!e.guard.empty() && try_compile(e.guard, eidx, ce.guard)) {
        if (ce.guard.kind() != ValueKind::Bool) add(t.name, eidx, "guard is not boolean");
        ce.atoms = ce.guard.conjuncts();
        for (const auto& at : ce.atoms) {
          CAtom ca;
          ca.clocked = at.mentions_clock();
          if (ca.clocked)
            if (auto d = at.comparison_difference()) {
              ca.diff = std::move(d->first);
              ca.op = d->second;
            }
          ce.atom_info.push_back(std::move(ca));
        }
      }
      for (const auto& u : e.updates) {
        CUpdate cu{};
        expr::Assignment a;
        try {
          a = expr::parse_assignment(u);
        } catch (const ExprError& err) {
          add(t.name, eidx, err.what());
          continue;
        }
        try {
          cu.value = expr::compile(*a.value, resolver, u);
        } catch (const ExprError& err) {
          add(t.name, eidx, err.what());
          continue;
        }
        if (int k = c.clock_index(a.target); k >= 0 && !a.index) {
          cu.target = CUpdate::Target::SelfClock;
          cu.slot = k;
          cu.kind = ValueKind::Real;
          const auto& nodes = cu.value.nodes();
          if (!(nodes.size() == 1 && nodes[0].op == expr::Op::Const && nodes[0].value >= 0))
            add(t.name, eidx, "clock " + a.target + " must be reset to a nonnegative constant");
        } else if (int v = c.var_index(a.target); v >= 0 && !a.index) {
          if (v >= c.n_locals) add(t.name, eidx, "assignment to parameter " + a.target);
          cu.target = CUpdate::Target::SelfVar;
          cu.slot = v;
          cu.kind = c.var_kinds[v];
        } else if (auto it = m.global_index_.find(a.target); it != m.global_index_.end()) {
          const GlobalSlot& g = m.globals_[it->second];
          if (t.observer) add(t.name, eidx, "observer writes global " + a.target);
          cu.kind = g.kind;
          cu.slot = g.slot;
          cu.size = g.size;
          if (g.size > 0) {
            if (!a.index) {
              add(t.name, eidx, "array " + a.target + " assigned without index");
              continue;
            }
            cu.target = CUpdate::Target::GlobalElem;
            try {
              cu.index = expr::compile(*a.index, resolver, u);
            } catch (const ExprError& err) {
              add(t.name, eidx, err.what());
              continue;
            }
          } else {
            if (a.index) add(t.name, eidx, a.target + " is not an array");
            cu.target = CUpdate::Target::Global;
          }
        } else {
          add(t.name, eidx, "unresolved assignment target " + a.target);
          continue;
        }
        if (!expr::assignable(cu.kind, cu.value.kind()))
          add(t.name, eidx, std::string("cannot assign ") + to_string(cu.value.kind()) + " to " +
                                to_string(cu.kind) + " " + a.target);
        ce.updates.push_back(std::move(cu));
      }
      if (e.spawn) {
        auto it = m.tmpl_index_.find(e.spawn->tmpl);
        if (it == m.tmpl_index_.end()) {
          add(t.name, eidx, "spawn of unknown template " + e.spawn->tmpl);
        } else {
          const Template& st = net.templates[it->second];
          if (!st.spawnable) add(t.name, eidx, "spawn of non-spawnable template " + st.name);
          if (st.params.size() != e.spawn->args.size()) add(t.name, eidx, "spawn argument count mismatch");
          if (st.observer != t.observer) add(t.name, eidx, "observers and model templates cannot spawn each other");
          ce.spawn_tmpl = it->second;
          for (const auto& arg : e.spawn->args) {
            expr::Compiled ca;
            if (try_compile(arg, eidx, ca)) ce.spawn_args.push_back(std::move(ca));
          }
        }
      }
      if (ce.source >= 0) c.locations[ce.source].out.push_back(eidx);
      c.edges.push_back(std::move(ce));
    }

    int despawn = m.label_id(kDespawnLabel);
    for (auto& cl : c.locations)
      cl.terminal = cl.out.empty() || (despawn >= 0 && (cl.labels >> despawn) & 1);

    if (t.spawnable) {
      // Every cycle must pass through a despawn-marked location.
      int n = static_cast<int>(c.locations.size());
      std::vector<int> color(n, 0);
      bool cyc = false;
      std::function<void(int)> dfs = [&](int u) {
        color[u] = 1;
        for (int ei : c.locations[u].out) {
          int v = c.edges[ei].target;
          if (v < 0 || c.locations[v].terminal) continue;
          if (color[v] == 1) cyc = true;
          else if (color[v] == 0) dfs(v);
        }
        color[u] = 2;
      };
      for (int u = 0; u < n && !cyc; ++u)
        if (color[u] == 0 && !c.locations[u].terminal) dfs(u);
      if (cyc) add(t.name, -1, "non-terminating spawnable template " + t.name);
    }
  }
}

ValidationReport validate(const Network& net) { return Model::validate_only(net); }

ValidationReport Model::validate_only(const Network& net) {
  ValidationReport rep;
  Model m(net, rep);
  return rep;
}

Model::Model(Network net, ValidationReport& rep) : net_(std::move(net)) { ModelAccess::build(*this, rep); }

Model::Model(Network net) : net_(std::move(net)) {
  ValidationReport rep;
  ModelAccess::build(*this, rep);
  if (!rep.ok()) throw ModelError("invalid network:\n" + rep.to_string());
}

// ---- runtime state ------------------------------------------------------------

const InstanceState* NetworkState::find(int id) const {
  auto it = std::lower_bound(instances.begin(), instances.end(), id,
                             [](const InstanceState& a, int v) { return a.id < v; });
  if (it == instances.end() || it->id != id) return nullptr;
  return &*it;
}

namespace {

InstanceState fresh(const CTemplate& t, int id, const std::vector<double>& args) {
  InstanceState is;
  is.id = id;
  is.loc = t.initial;
  is.clocks = t.clock_init;
  is.vars = t.var_init;
  for (size_t i = 0; i < args.size() && t.n_locals + i < is.vars.size(); ++i)
    is.vars[t.n_locals + i] = expr::coerce(args[i], t.var_kinds[t.n_locals + i]);
  return is;
}

}  // namespace

NetworkState initial_state(const Model& m) {
  NetworkState s;
  s.globals = m.global_init();
  const auto& decl = m.network().instances;
  for (size_t i = 0; i < decl.size(); ++i) {
    int ti = m.template_index(decl[i].tmpl);
    InstanceState is = fresh(m.tmpl(ti), m.static_id(i), decl[i].args);
    is.tmpl = ti;
    s.instances.push_back(std::move(is));
  }
  s.next_id = m.model_static_count();
  s.next_observer_id = kObserverIdBase + static_cast<int>(decl.size()) - m.model_static_count();
  return s;
}

double StateEnv::rate_of(const InstanceState& is, int clock) const {
  const CLocation& l = m_.tmpl(is.tmpl).locations[is.loc];
  if (l.all_rates_one) return 1.0;
  StateEnv inner(m_, s_, &is);
  return l.rates[clock].eval(inner);
}

bool StateEnv::inst_label(int inst, int label) const {
  const InstanceState& is = at(inst);
  return (m_.tmpl(is.tmpl).locations[is.loc].labels >> label) & 1;
}

bool StateEnv::any_at(int tmpl, int loc) const {
  for (const auto& is : s_.instances)
    if (is.tmpl == tmpl && is.loc == loc) return true;
  return false;
}

bool StateEnv::any_label(int tmpl, int label) const {
  for (const auto& is : s_.instances)
    if (is.tmpl == tmpl && ((m_.tmpl(is.tmpl).locations[is.loc].labels >> label) & 1)) return true;
  return false;
}

namespace {

bool guard_holds(const Model& m, const NetworkState& s, const InstanceState& is, const CEdge& e) {
  if (e.guard.empty()) return true;
  StateEnv env(m, s, &is);
  return e.guard.holds(env);
}

bool has_enabled_sender(const Model& m, const NetworkState& s, int self_id, int channel) {
  for (const auto& other : s.instances) {
    if (other.id == self_id) continue;
    const CTemplate& t = m.tmpl(other.tmpl);
    for (int ei : t.locations[other.loc].out) {
      const CEdge& e = t.edges[ei];
      if (e.sync == SyncKind::Send && e.channel == channel && guard_holds(m, s, other, e)) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<EdgeRef> enabled_edges(const Model& m, const NetworkState& s, int instance_id) {
  const InstanceState* is = s.find(instance_id);
  if (!is) throw ModelError("no live instance with id " + std::to_string(instance_id));
  const CTemplate& t = m.tmpl(is->tmpl);
  std::vector<EdgeRef> out;
  for (int ei : t.locations[is->loc].out) {
    const CEdge& e = t.edges[ei];
    if (!guard_holds(m, s, *is, e)) continue;
    if (e.sync == SyncKind::Recv && m.channels()[e.channel].kind == ChannelKind::Binary &&
        !has_enabled_sender(m, s, is->id, e.channel))
      continue;
    out.push_back({is->id, ei, e.weight});
  }
  return out;
}

int spawn_into(const Model& m, NetworkState& s, int tmpl, const std::vector<double>& args) {
  const CTemplate& t = m.tmpl(tmpl);
  if (!t.spawnable) throw ModelError("spawn of non-spawnable template " + t.name);
  int id = t.observer ? s.next_observer_id++ : s.next_id++;
  InstanceState is = fresh(t, id, args);
  is.tmpl = tmpl;
  is.spawned = true;
  auto pos = std::lower_bound(s.instances.begin(), s.instances.end(), id,
                              [](const InstanceState& a, int v) { return a.id < v; });
  s.instances.insert(pos, std::move(is));
  return id;
}

NetworkState instantiate_spawn(const Model& m, const NetworkState& s, const std::string& tmpl,
                               const std::vector<double>& args) {
  int ti = m.template_index(tmpl);
  if (ti < 0) throw ModelError("unknown template " + tmpl);
  if (m.tmpl(ti).var_names.size() - m.tmpl(ti).n_locals != args.size())
    throw ModelError("spawn argument count mismatch for " + tmpl);
  NetworkState out = s;
  spawn_into(m, out, ti, args);
  return out;
}

std::vector<int> reap_terminated(const Model& m, NetworkState& s) {
  std::vector<int> gone;
  auto it = std::remove_if(s.instances.begin(), s.instances.end(), [&](const InstanceState& is) {
    if (is.spawned && m.tmpl(is.tmpl).locations[is.loc].terminal) {
      gone.push_back(is.id);
      return true;
    }
    return false;
  });
  s.instances.erase(it, s.instances.end());
  return gone;
}

}  // namespace stasmc
