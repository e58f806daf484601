#include "stasmc/observers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "stasmc/csv.hpp"
#include "stasmc/sim.hpp"

namespace stasmc {

namespace {

std::string num(double v) { return "(" + csv::num(v) + ")"; }

Edge internal(const std::string& from, const std::string& to, std::string guard,
              std::vector<std::string> updates = {}) {
  Edge e;
  e.source = from;
  e.target = to;
  e.guard = std::move(guard);
  e.updates = std::move(updates);
  return e;
}

Template observer_template(const std::string& name, std::vector<std::string> locations) {
  Template t;
  t.name = name;
  t.observer = true;
  for (auto& l : locations) {
    Location loc;
    loc.name = std::move(l);
    t.locations.push_back(std::move(loc));
  }
  t.initial = t.locations.front().name;
  return t;
}

VarDecl int_var(const std::string& n) {
  VarDecl v;
  v.name = n;
  v.kind = ValueKind::Int;
  return v;
}

void add_instance(Network& net, const std::string& name, const std::string& tmpl) {
  InstanceDecl d;
  d.name = name;
  d.tmpl = tmpl;
  net.instances.push_back(std::move(d));
}

void claim(const Network& net, const std::string& n) {
  if (net.find_template(n)) throw ModelError("observer name clashes with template " + n);
  for (const auto& i : net.instances)
    if (i.name == n) throw ModelError("observer name clashes with instance " + n);
}

Template make_tap(const Network& net, const EventBinding& b, const std::string& name) {
  Template t;
  std::vector<std::string> upd{"n = n + 1"};
  if (!b.id.empty()) upd.push_back("id = " + b.id);
  if (!b.channel.empty()) {
    auto ch = std::find_if(net.channels.begin(), net.channels.end(),
                           [&](const Channel& c) { return c.name == b.channel; });
    if (ch == net.channels.end()) throw ModelError("binding for " + b.tag + ": no channel " + b.channel);
    if (ch->kind != ChannelKind::Broadcast)
      throw ModelError("binding for " + b.tag + ": " + b.channel + " is a binary channel; observing it would "
                       "change who synchronises");
    t = observer_template(name, {"idle"});
    Edge e = internal("idle", "idle", "", upd);
    e.sync = {SyncKind::Recv, b.channel};
    t.edges.push_back(std::move(e));
  } else if (!b.predicate.empty()) {
    t = observer_template(name, {"low", "high"});
    t.edges.push_back(internal("low", "high", b.predicate, upd));
    t.edges.push_back(internal("high", "low", "!(" + b.predicate + ")"));
  } else {
    throw ModelError("binding for " + b.tag + " names neither a channel nor a predicate");
  }
  t.vars = {int_var("n"), int_var("id")};
  return t;
}

struct Builder {
  const ConstraintSpec& spec;
  std::string name;
  std::map<std::string, std::string> tap;  // tag -> tap instance
  bool ids = false;

  std::string arrived(const std::string& tag) const { return tap.at(tag) + ".n > c_" + tag; }
  std::string consume(const std::string& tag) const { return "c_" + tag + " = c_" + tag + " + 1"; }

  Template main_template() const {
    Template t = observer_template(name, {"run", "fail"});
    t.locations[1].labels.insert("fail");
    for (const auto& [tag, inst] : tap) t.vars.push_back(int_var("c_" + tag));
    const double tol = kMonitorTol;
    auto add = [&](std::string guard, std::vector<std::string> upd, const std::string& to = "run") {
      t.edges.push_back(internal("run", to, std::move(guard), std::move(upd)));
    };
    switch (spec.kind) {
      case ConstraintKind::PeriodicNoncumulative: {
        const std::string& e = spec.event;
        t.clocks.push_back({"x", 0});
        t.vars.push_back(int_var("i"));
        std::string due = "(i + 1) * " + num(spec.period);
        add(arrived(e) + " && x >= " + due + " - " + num(spec.jitter + tol) + " && x <= " + due + " + " +
                num(spec.jitter + tol),
            {consume(e), "i = i + 1"});
        add(arrived(e), {consume(e), "i = i + 1"}, "fail");
        break;
      }
      case ConstraintKind::PeriodicCumulative:
      case ConstraintKind::Sporadic: {
        const std::string& e = spec.event;
        t.clocks.push_back({"x", 0});
        t.vars.push_back(int_var("seen"));
        std::string ok = spec.kind == ConstraintKind::Sporadic
                             ? "x >= " + num(spec.min - tol)
                             : "x >= " + num(spec.period - spec.jitter - tol) + " && x <= " +
                                   num(spec.period + spec.jitter + tol);
        add(arrived(e) + " && seen == 0", {consume(e), "seen = 1", "x = 0"});
        add(arrived(e) + " && " + ok, {consume(e), "x = 0"});
        add(arrived(e), {consume(e)}, "fail");
        break;
      }
      case ConstraintKind::Synchronization: {
        t.clocks.push_back({"x", 0});
        t.vars.push_back(int_var("open"));
        std::string all = "open == 1";
        for (size_t k = 0; k < spec.members.size(); ++k) {
          t.vars.push_back(int_var("s_" + std::to_string(k)));
          all += " && s_" + std::to_string(k) + " == 1";
        }
        std::string in_time = "x <= " + num(spec.tolerance + tol);
        for (size_t k = 0; k < spec.members.size(); ++k) {
          const std::string& m = spec.members[k];
          std::vector<std::string> open{consume(m), "open = 1", "x = 0"};
          for (size_t q = 0; q < spec.members.size(); ++q)
            open.push_back("s_" + std::to_string(q) + " = " + (q == k ? "1" : "0"));
          add(arrived(m) + " && open == 0", open);
          add(arrived(m) + " && " + in_time, {consume(m), "s_" + std::to_string(k) + " = 1"});
          add(arrived(m), {consume(m)}, "fail");
        }
        add(all, {"open = 0"});
        add("open == 1 && x > " + num(spec.tolerance + tol), {}, "fail");
        break;
      }
      case ConstraintKind::Execution:
      case ConstraintKind::EndToEnd: {
        t.vars.push_back(int_var("k"));
        t.vars.push_back(int_var("matched"));
        t.vars.push_back(int_var("last"));
        Edge in = internal("run", "run", arrived(spec.in), {consume(spec.in), "k = k + 1"});
        in.spawn = Spawn{name + "_track", {ids ? tap.at(spec.in) + ".id" : "k"}};
        t.edges.push_back(std::move(in));
        if (ids) {
          add(arrived(spec.out), {consume(spec.out), "last = " + tap.at(spec.out) + ".id"});
        } else {
          add(arrived(spec.out) + " && matched < k", {consume(spec.out), "matched = matched + 1"});
          add(arrived(spec.out), {consume(spec.out)});
        }
        break;
      }
      case ConstraintKind::Comparison: break;
    }
    return t;
  }

  // One tracker per in/source occurrence, resolved by its matching out.
  Template tracker() const {
    Template t = observer_template(name + "_track", {"wait", "done", "fail", "gone"});
    t.spawnable = true;
    t.locations[2].labels.insert("fail");
    t.params.push_back({"rid", ValueKind::Int});
    t.clocks.push_back({"x", 0});
    const double tol = kMonitorTol;
    std::string key = ids ? name + ".last == rid" : name + ".matched >= rid";
    t.edges.push_back(internal("wait", "done",
                               key + " && x >= " + num(spec.lower - tol) + " && x <= " + num(spec.upper + tol)));
    t.edges.push_back(internal("wait", "fail", key));
    if (spec.kind == ConstraintKind::EndToEnd && ids) t.edges.push_back(internal("wait", "gone", name + ".last > rid"));
    if (spec.kind == ConstraintKind::Execution) t.edges.push_back(internal("wait", "fail", "x > " + num(spec.upper + tol)));
    return t;
  }
};

}  // namespace

Attached attach(const ConstraintSpec& spec, const Network& net, const std::vector<EventBinding>& bindings,
                const std::string& name) {
  try {
    spec.check();
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("invalid constraint: ") + e.what());
  }
  Attached a;
  a.network = net;
  a.name = name;
  Builder b{spec, name, {}, false};
  int with_id = 0;
  for (const auto& tag : spec.tags()) {
    auto it = std::find_if(bindings.begin(), bindings.end(), [&](const EventBinding& x) { return x.tag == tag; });
    if (it == bindings.end()) throw ModelError("no binding for event " + tag);
    std::string inst = name + "_" + tag;
    claim(a.network, inst);
    a.network.templates.push_back(make_tap(net, *it, inst));
    add_instance(a.network, inst, inst);
    b.tap[tag] = inst;
    a.taps.emplace_back(tag, inst);
    if (!it->id.empty()) ++with_id;
  }
  bool matched = spec.kind == ConstraintKind::Execution || spec.kind == ConstraintKind::EndToEnd;
  if (matched) {
    if (with_id == 1) throw ModelError("ids must be bound for both " + spec.in + " and " + spec.out + " or neither");
    b.ids = with_id == 2;
  }
  if (spec.kind != ConstraintKind::Comparison) {
    claim(a.network, name);
    a.network.templates.push_back(b.main_template());
    add_instance(a.network, name, name);
    a.fail_predicate = name + ".fail";
    if (matched) {
      claim(a.network, name + "_track");
      a.network.templates.push_back(b.tracker());
      a.fail_predicate = "(" + a.fail_predicate + " || " + name + "_track.fail)";
    }
  }
  auto rep = validate(a.network);
  if (!rep.ok()) throw ModelError("attaching " + name + ": " + rep.to_string());
  return a;
}

namespace {

Attached finish_state_observer(const Network& net, const std::string& name, Template t) {
  Attached a;
  a.network = net;
  a.name = name;
  claim(a.network, name);
  a.network.templates.push_back(std::move(t));
  add_instance(a.network, name, name);
  a.fail_predicate = name + ".fail";
  auto rep = validate(a.network);
  if (!rep.ok()) throw ModelError("attaching " + name + ": " + rep.to_string());
  return a;
}

}  // namespace

Attached attach_response(const Network& net, const std::string& name, const std::string& premise,
                         const std::string& response, double window) {
  if (!(window >= 0)) throw ModelError("response window must be nonnegative");
  Template t = observer_template(name, {"idle", "wait", "held", "fail"});
  t.locations[3].labels.insert("fail");
  t.clocks = {ClockDecl{"obs_elapsed", 0}};
  std::string p = "(" + premise + ")", q = "(" + response + ")";
  t.edges.push_back(internal("idle", "held", p + " && " + q));
  t.edges.push_back(internal("idle", "wait", p, {"obs_elapsed = 0"}));
  t.edges.push_back(internal("wait", "held", q));
  t.edges.push_back(internal("wait", "fail", "obs_elapsed > " + num(window + kMonitorTol)));
  t.edges.push_back(internal("held", "idle", "!" + p));
  return finish_state_observer(net, name, std::move(t));
}

Attached attach_invariant(const Network& net, const std::string& name, const std::string& bad) {
  Template t = observer_template(name, {"ok", "fail"});
  t.locations[1].labels.insert("fail");
  t.edges.push_back(internal("ok", "fail", "(" + bad + ")"));
  return finish_state_observer(net, name, std::move(t));
}

TapRecorder::TapRecorder(const Model& m, const std::vector<std::pair<std::string, std::string>>& taps) {
  for (const auto& [tag, inst] : taps) {
    int id = m.instance_index(inst);
    int ti = m.template_index(inst);
    if (id < 0 || ti < 0) throw ModelError("model has no tap instance " + inst);
    const CTemplate& t = m.tmpl(ti);
    taps_.push_back({id, t.var_index("n"), t.var_index("id"), tag});
  }
}

bool TapRecorder::event(const Model&, const NetworkState& s, const Event& e) {
  if (e.kind != EventKind::Recv && e.kind != EventKind::Internal) return true;
  for (const auto& t : taps_) {
    if (t.instance != e.instance) continue;
    const InstanceState* is = s.find(e.instance);
    // only the counting edge changes location from low to high or loops on idle
    if (e.kind == EventKind::Internal && e.to < e.from) break;
    stream_.push_back({e.time, t.tag, is ? std::lround(is->vars[t.id_slot]) : 0});
    break;
  }
  return true;
}

EventStream record_taps(const Model& m, const Attached& a, double bound, std::uint64_t seed, std::uint64_t stream) {
  TapRecorder rec(m, a.taps);
  SimOptions o;
  o.bound = bound;
  o.seed = seed;
  o.stream = stream;
  o.record_events = false;
  o.listener = &rec;
  simulate(m, o);
  return rec.stream();
}

MonitorProperty::MonitorProperty(ConstraintSpec spec, Attached attached, double bound, std::optional<WeaklyHard> wh)
    : spec_(std::move(spec)), att_(std::move(attached)), bound_(bound), wh_(wh) {}

std::vector<MonitorVerdict> MonitorProperty::verdicts(const Model& m, std::uint64_t seed, std::uint64_t stream) const {
  return run_monitor(spec_, record_taps(m, att_, bound_, seed, stream), bound_);
}

bool MonitorProperty::holds(const Model& m, std::uint64_t seed, std::uint64_t stream) const {
  auto v = verdicts(m, seed, stream);
  if (wh_) return apply_weakly_hard(non_vacuous(v), *wh_) == WhResult::Satisfied;
  return std::none_of(v.begin(), v.end(), [](const MonitorVerdict& x) { return x.outcome == Outcome::Fail; });
}

std::string MonitorProperty::describe() const {
  std::string s = std::string(to_string(spec_.kind)) + " monitor " + att_.name;
  if (wh_) s += " WH(" + std::to_string(wh_->m) + "," + std::to_string(wh_->k) + ")";
  return s;
}

}  // namespace stasmc
