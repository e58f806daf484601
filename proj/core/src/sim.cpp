#include "stasmc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "stasmc/csv.hpp"

namespace stasmc {

namespace {

constexpr double kTol = 1e-9;
constexpr double kNudge = 1e-9;

bool is_observer(const Model& m, const InstanceState& is) { return m.tmpl(is.tmpl).observer; }

class Chain : public RunListener {
 public:
  Chain(RunListener* a, RunListener* b) : a_(a), b_(b) {}
  bool point(const Model& m, const NetworkState& s, double dt) override {
    bool ok = true;
    if (a_) ok = a_->point(m, s, dt) && ok;
    if (b_) ok = b_->point(m, s, dt) && ok;
    return ok;
  }
  bool segment(const Model& m, const NetworkState& s, double a, double b) override {
    bool ok = true;
    if (a_) ok = a_->segment(m, s, a, b) && ok;
    if (b_) ok = b_->segment(m, s, a, b) && ok;
    return ok;
  }
  bool event(const Model& m, const NetworkState& s, const Event& e) override {
    bool ok = true;
    if (a_) ok = a_->event(m, s, e) && ok;
    if (b_) ok = b_->event(m, s, e) && ok;
    return ok;
  }

 private:
  RunListener* a_;
  RunListener* b_;
};

class WatchRecorder : public RunListener {
 public:
  WatchRecorder(const Model& m, const std::vector<std::string>& watch) {
    for (const auto& w : watch) exprs_.push_back(m.compile_global(w));
    traces.resize(exprs_.size());
  }
  bool point(const Model& m, const NetworkState& s, double dt) override {
    record(m, s, dt);
    return true;
  }
  bool segment(const Model& m, const NetworkState& s, double, double b) override {
    record(m, s, b);
    return true;
  }
  std::vector<Trace> traces;

 private:
  void record(const Model& m, const NetworkState& s, double dt) {
    StateEnv env(m, s);
    double t = s.time + dt;
    for (size_t i = 0; i < exprs_.size(); ++i) {
      double v = exprs_[i].eval(env, dt);
      auto& tr = traces[i];
      if (!tr.empty() && tr.back().first == t && tr.back().second == v) continue;
      tr.emplace_back(t, v);
    }
  }
  std::vector<expr::Compiled> exprs_;
};

}  // namespace

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Init: return "init";
    case EventKind::Internal: return "internal";
    case EventKind::Send: return "send";
    case EventKind::Recv: return "recv";
    case EventKind::Spawn: return "spawn";
    case EventKind::Despawn: return "despawn";
    case EventKind::Deadlock: return "deadlock";
    case EventKind::End: return "end";
  }
  return "?";
}

std::vector<Event> model_events(const std::vector<Event>& events) {
  std::vector<Event> out;
  for (const auto& e : events)
    if (!e.observer) out.push_back(e);
  return out;
}

double sample_delay(const DelayView& v, RngStream& rng) {
  double upper = std::min(v.deadline, v.latest);
  if (upper < v.earliest) upper = v.earliest;
  if (std::isfinite(upper)) {
    if (upper - v.earliest <= 0) return v.earliest;
    return rng.uniform(v.earliest, upper);
  }
  if (!(v.exit_rate > 0)) throw SimError("exit rate must be positive");
  return v.earliest + rng.exponential(v.exit_rate);
}

// ---- Simulator -------------------------------------------------------------------

Simulator::Simulator(const Model& m, RngStream& rng, RunListener* listener, bool record)
    : m_(m), rng_(rng), listener_(listener), record_(record) {}

bool Simulator::emit(const NetworkState& s, const Event& e) {
  if (record_) events_.push_back(e);
  if (listener_ && !listener_->event(m_, s, e)) stopped_ = true;
  return !stopped_;
}

bool Simulator::notify_point(const NetworkState& s, double dt) {
  if (listener_ && !listener_->point(m_, s, dt)) stopped_ = true;
  return !stopped_;
}

bool Simulator::notify_segment(const NetworkState& s, double a, double b) {
  if (listener_ && b >= a && !listener_->segment(m_, s, a, b)) stopped_ = true;
  return !stopped_;
}

double Simulator::deadline(const NetworkState& s, const InstanceState& is) const {
  const CLocation& loc = m_.tmpl(is.tmpl).locations[is.loc];
  if (loc.invariant.empty()) return kInf;
  StateEnv env(m_, s, &is);
  double d = kInf;
  for (const auto& b : loc.invariant) {
    double u = b.bound.eval(env);
    double v = is.clocks[b.clock];
    if (v >= u - kTol) {
      if (v > u + 1e-6)
        throw SimError("invariant of " + instance_name(m_, is) + "." + loc.name + " violated at t=" +
                       csv::num(s.time));
      return 0;
    }
    double r = env.rate_of(is, b.clock);
    if (r <= 0)
      throw SimError("clock " + m_.tmpl(is.tmpl).clock_names[b.clock] + " bounded in " + loc.name +
                     " but its rate is not positive");
    d = std::min(d, (u - v) / r);
  }
  return d;
}

std::optional<std::pair<double, double>> Simulator::edge_window(const NetworkState& s, const InstanceState& is,
                                                                const CEdge& e, double limit) const {
  double lo = 0, hi = limit;
  if (!e.guard.empty()) {
    StateEnv env(m_, s, &is);
    for (size_t i = 0; i < e.atoms.size(); ++i) {
      const CAtom& a = e.atom_info[i];
      if (!a.clocked) {
        if (!e.atoms[i].holds(env)) return std::nullopt;
        continue;
      }
      if (a.op == expr::Op::Const) continue;
      auto aff = a.diff.affine(env);
      if (!aff) continue;
      double v = aff->first, sl = aff->second;
      switch (a.op) {
        case expr::Op::Ge:
        case expr::Op::Gt:
          if (sl > 0) lo = std::max(lo, -v / sl);
          else if (sl < 0) hi = std::min(hi, -v / sl);
          else if (v < -kTol) return std::nullopt;
          break;
        case expr::Op::Le:
        case expr::Op::Lt:
          if (sl > 0) hi = std::min(hi, -v / sl);
          else if (sl < 0) lo = std::max(lo, -v / sl);
          else if (v > kTol) return std::nullopt;
          break;
        case expr::Op::Eq:
          if (sl != 0) {
            lo = std::max(lo, -v / sl);
            hi = std::min(hi, -v / sl);
          } else if (std::abs(v) > kTol) {
            return std::nullopt;
          }
          break;
        default: break;
      }
      if (lo > hi + kTol) return std::nullopt;
    }
    if (lo > limit + kTol) return std::nullopt;
    lo = std::min(lo, limit);
    if (hi < lo) hi = lo;
    if (!e.guard.holds(env, lo)) {
      double n = lo + kNudge;
      if (n > limit + kTol || !e.guard.holds(env, n)) return std::nullopt;
      lo = std::min(n, std::max(limit, lo));
    }
  }
  return std::make_pair(lo, hi);
}

std::optional<std::pair<double, double>> Simulator::active_window(const NetworkState& s, const InstanceState& is,
                                                                  double limit) const {
  const CTemplate& t = m_.tmpl(is.tmpl);
  int idx = static_cast<int>(&is - s.instances.data());
  std::optional<std::pair<double, double>> best;
  for (int ei : t.locations[is.loc].out) {
    const CEdge& e = t.edges[ei];
    if (e.sync == SyncKind::Recv) continue;
    auto w = edge_window(s, is, e, limit);
    if (!w) continue;
    if (e.sync == SyncKind::Send && m_.channels()[e.channel].kind == ChannelKind::Binary &&
        !receiver_exists(s, idx, e.channel, w->first))
      continue;
    if (!best) best = w;
    else best = std::make_pair(std::min(best->first, w->first), std::max(best->second, w->second));
  }
  return best;
}

std::vector<int> Simulator::enabled_recv(const NetworkState& s, int idx, int channel, double dt) const {
  const InstanceState& is = s.instances[idx];
  const CTemplate& t = m_.tmpl(is.tmpl);
  std::vector<int> out;
  StateEnv env(m_, s, &is);
  for (int ei : t.locations[is.loc].out) {
    const CEdge& e = t.edges[ei];
    if (e.sync != SyncKind::Recv || e.channel != channel) continue;
    if (e.guard.empty() || e.guard.holds(env, dt)) out.push_back(ei);
  }
  return out;
}

bool Simulator::receiver_exists(const NetworkState& s, int sender_idx, int channel, double dt) const {
  for (int j = 0; j < static_cast<int>(s.instances.size()); ++j) {
    if (j == sender_idx || is_observer(m_, s.instances[j])) continue;
    if (!enabled_recv(s, j, channel, dt).empty()) return true;
  }
  return false;
}

std::vector<int> Simulator::enabled_active(const NetworkState& s, int idx, double dt) const {
  const InstanceState& is = s.instances[idx];
  const CTemplate& t = m_.tmpl(is.tmpl);
  std::vector<int> out;
  StateEnv env(m_, s, &is);
  for (int ei : t.locations[is.loc].out) {
    const CEdge& e = t.edges[ei];
    if (e.sync == SyncKind::Recv) continue;
    if (!e.guard.empty() && !e.guard.holds(env, dt)) continue;
    if (e.sync == SyncKind::Send && m_.channels()[e.channel].kind == ChannelKind::Binary &&
        !receiver_exists(s, idx, e.channel, dt))
      continue;
    out.push_back(ei);
  }
  return out;
}

int Simulator::pick_weighted(const InstanceState& is, const std::vector<int>& edges) {
  if (edges.size() == 1) return edges[0];
  const CTemplate& t = m_.tmpl(is.tmpl);
  double total = 0;
  for (int ei : edges) total += t.edges[ei].weight;
  double u = rng_.uniform01() * total;
  for (int ei : edges) {
    u -= t.edges[ei].weight;
    if (u < 0) return ei;
  }
  return edges.back();
}

void Simulator::fire(NetworkState& s, int sender_idx, int edge, double tau) {
  struct Part {
    int id;
    int edge;
  };
  std::vector<Part> parts{{s.instances[sender_idx].id, edge}};
  const InstanceState& sender = s.instances[sender_idx];
  const CEdge& se = m_.tmpl(sender.tmpl).edges[edge];
  if (se.sync == SyncKind::Send) {
    const Channel& ch = m_.channels()[se.channel];
    if (ch.kind == ChannelKind::Broadcast) {
      std::vector<std::pair<int, std::vector<int>>> recv;
      for (int j = 0; j < static_cast<int>(s.instances.size()); ++j) {
        if (j == sender_idx) continue;
        auto r = enabled_recv(s, j, se.channel, tau);
        if (!r.empty()) recv.emplace_back(j, std::move(r));
      }
      for (auto& [j, r] : recv) {
        const InstanceState& ri = s.instances[j];
        int pick = is_observer(m_, ri) ? r.front() : pick_weighted(ri, r);
        parts.push_back({ri.id, pick});
      }
    } else {
      std::vector<std::pair<int, std::vector<int>>> cands;
      for (int j = 0; j < static_cast<int>(s.instances.size()); ++j) {
        if (j == sender_idx || is_observer(m_, s.instances[j])) continue;
        auto r = enabled_recv(s, j, se.channel, tau);
        if (!r.empty()) cands.emplace_back(j, std::move(r));
      }
      if (cands.empty()) throw SimError("binary send without receiver");
      auto& c = cands[cands.size() == 1 ? 0 : rng_.below(cands.size())];
      parts.push_back({s.instances[c.first].id, pick_weighted(s.instances[c.first], c.second)});
    }
  }

  auto inst = [&](int id) -> InstanceState& {
    auto it = std::lower_bound(s.instances.begin(), s.instances.end(), id,
                               [](const InstanceState& a, int v) { return a.id < v; });
    return *it;
  };

  std::vector<std::vector<double>> old_rates(parts.size());
  std::vector<std::vector<char>> reset(parts.size());
  if (tau != 0) {
    StateEnv env(m_, s);
    for (size_t p = 0; p < parts.size(); ++p) {
      InstanceState& is = inst(parts[p].id);
      for (size_t c = 0; c < is.clocks.size(); ++c) old_rates[p].push_back(env.rate_of(is, static_cast<int>(c)));
      reset[p].assign(is.clocks.size(), 0);
    }
  }
  // Rates may read globals, so bystanders whose rates change under the
  // updates are rebased too.
  auto writes_globals = [&] {
    for (const auto& pt : parts)
      for (const auto& u : m_.tmpl(inst(pt.id).tmpl).edges[pt.edge].updates)
        if (u.target == CUpdate::Target::Global || u.target == CUpdate::Target::GlobalElem) return true;
    return false;
  };
  std::vector<std::pair<int, std::vector<double>>> bystanders;
  if (tau != 0 && writes_globals()) {
    StateEnv env(m_, s);
    for (const auto& is : s.instances) {
      if (m_.tmpl(is.tmpl).locations[is.loc].all_rates_one || is.clocks.empty()) continue;
      if (std::any_of(parts.begin(), parts.end(), [&](const Part& p) { return p.id == is.id; })) continue;
      std::vector<double> r;
      for (size_t c = 0; c < is.clocks.size(); ++c) r.push_back(env.rate_of(is, static_cast<int>(c)));
      bystanders.emplace_back(is.id, std::move(r));
    }
  }

  for (size_t p = 0; p < parts.size(); ++p) {
    InstanceState& is = inst(parts[p].id);
    const CEdge& e = m_.tmpl(is.tmpl).edges[parts[p].edge];
    StateEnv env(m_, s, &is);
    for (const auto& u : e.updates) {
      double v = u.value.eval(env, tau);
      switch (u.target) {
        case CUpdate::Target::SelfVar: is.vars[u.slot] = expr::coerce(v, u.kind); break;
        case CUpdate::Target::SelfClock:
          is.clocks[u.slot] = v;
          if (tau != 0) reset[p][u.slot] = 1;
          break;
        case CUpdate::Target::Global: s.globals[u.slot] = expr::coerce(v, u.kind); break;
        case CUpdate::Target::GlobalElem: {
          double iv = u.index.eval(env, tau);
          long k = std::lround(iv);
          if (k < 0 || k >= u.size)
            throw SimError("array index " + std::to_string(k) + " out of range in " + u.index.text());
          s.globals[u.slot + k] = expr::coerce(v, u.kind);
          break;
        }
      }
    }
  }

  double now = s.time + tau;
  for (size_t p = 0; p < parts.size(); ++p) {
    InstanceState& is = inst(parts[p].id);
    const CEdge& e = m_.tmpl(is.tmpl).edges[parts[p].edge];
    Event ev;
    ev.time = now;
    ev.step = step_;
    ev.instance = is.id;
    ev.tmpl = is.tmpl;
    ev.edge = parts[p].edge;
    ev.from = is.loc;
    ev.to = e.target;
    ev.kind = p == 0 ? (e.sync == SyncKind::Send ? EventKind::Send : EventKind::Internal) : EventKind::Recv;
    ev.channel = e.sync == SyncKind::None ? -1 : e.channel;
    ev.observer = is_observer(m_, is);
    is.loc = e.target;
    emit(s, ev);
  }

  if (tau != 0) {
    StateEnv env(m_, s);
    for (size_t p = 0; p < parts.size(); ++p) {
      InstanceState& is = inst(parts[p].id);
      for (size_t c = 0; c < is.clocks.size(); ++c) {
        double rn = env.rate_of(is, static_cast<int>(c));
        if (reset[p][c]) is.clocks[c] -= tau * rn;
        else is.clocks[c] += tau * (old_rates[p][c] - rn);
      }
    }
    for (auto& [id, old] : bystanders) {
      InstanceState& is = inst(id);
      for (size_t c = 0; c < is.clocks.size(); ++c) is.clocks[c] += tau * (old[c] - env.rate_of(is, static_cast<int>(c)));
    }
  }

  std::vector<std::pair<int, std::vector<double>>> spawns;
  for (const auto& pt : parts) {
    InstanceState& is = inst(pt.id);
    const CEdge& e = m_.tmpl(is.tmpl).edges[pt.edge];
    if (e.spawn_tmpl < 0) continue;
    StateEnv env(m_, s, &is);
    std::vector<double> args;
    for (const auto& a : e.spawn_args) args.push_back(a.eval(env, tau));
    spawns.emplace_back(e.spawn_tmpl, std::move(args));
  }
  for (auto& [ti, args] : spawns) {
    int id = spawn_into(m_, s, ti, args);
    InstanceState& is = inst(id);
    if (tau != 0) {
      StateEnv env(m_, s);
      for (size_t c = 0; c < is.clocks.size(); ++c) is.clocks[c] -= tau * env.rate_of(is, static_cast<int>(c));
    }
    Event ev;
    ev.time = now;
    ev.step = step_;
    ev.instance = id;
    ev.tmpl = ti;
    ev.to = is.loc;
    ev.kind = EventKind::Spawn;
    ev.observer = m_.tmpl(ti).observer;
    emit(s, ev);
  }
}

// Fires observer edges at the earliest offsets in [from, until) (or
// [from, until] when inclusive). Observers act urgently and without
// randomness, so their presence never changes the model's sample path.
bool Simulator::observer_urgent(NetworkState& s, double from, double until, bool inclusive) {
  double& cur = obs_offset_;
  cur = from;
  for (int guard = 0;; ++guard) {
    if (guard > 100000) throw SimError("observer edges keep firing without time passing");
    int best = -1;
    double best_lo = kInf;
    for (int j = 0; j < static_cast<int>(s.instances.size()); ++j) {
      const InstanceState& is = s.instances[j];
      if (!is_observer(m_, is)) continue;
      const CTemplate& t = m_.tmpl(is.tmpl);
      for (int ei : t.locations[is.loc].out) {
        const CEdge& e = t.edges[ei];
        if (e.sync == SyncKind::Recv) continue;
        auto w = edge_window(s, is, e, until);
        if (!w) continue;
        double lo = std::max(w->first, cur);
        if (w->second < cur - kTol) continue;
        if (lo != w->first) {
          StateEnv env(m_, s, &is);
          if (!e.guard.empty() && !e.guard.holds(env, lo)) continue;
        }
        if (lo < best_lo) {
          best_lo = lo;
          best = j;
        }
      }
    }
    if (best < 0) return true;
    if (inclusive ? best_lo > until : best_lo >= until) return true;
    if (!notify_segment(s, cur, best_lo)) return false;
    auto en = enabled_active(s, best, best_lo);
    if (en.empty()) en = enabled_active(s, best, best_lo + kNudge);
    if (en.empty()) return true;
    fire(s, best, en.front(), best_lo);
    cur = best_lo;
    if (stopped_ || !notify_point(s, cur)) return false;
  }
}

void Simulator::advance(NetworkState& s, double dt) {
  if (dt == 0) return;
  StateEnv env(m_, s);
  std::vector<std::vector<double>> rates;
  rates.reserve(s.instances.size());
  for (const auto& is : s.instances) {
    const CLocation& l = m_.tmpl(is.tmpl).locations[is.loc];
    std::vector<double> r(is.clocks.size(), 1.0);
    if (!l.all_rates_one)
      for (size_t c = 0; c < r.size(); ++c) r[c] = env.rate_of(is, static_cast<int>(c));
    rates.push_back(std::move(r));
  }
  for (size_t i = 0; i < s.instances.size(); ++i)
    for (size_t c = 0; c < s.instances[i].clocks.size(); ++c) s.instances[i].clocks[c] += dt * rates[i][c];
  s.time += dt;
}

NetworkState Simulator::initial() {
  NetworkState s = initial_state(m_);
  for (const auto& is : s.instances) {
    Event ev;
    ev.instance = is.id;
    ev.tmpl = is.tmpl;
    ev.to = is.loc;
    ev.kind = EventKind::Init;
    ev.observer = is_observer(m_, is);
    emit(s, ev);
  }
  if (notify_point(s, 0)) observer_urgent(s, 0, 0, true);
  return s;
}

bool Simulator::step(NetworkState& s, double bound) {
  if (stopped_) return false;
  auto finish = [&]() {
    Event ev;
    ev.time = s.time;
    ev.step = step_;
    ev.kind = EventKind::End;
    emit(s, ev);
    return false;
  };

  {
    std::vector<Event> gone;
    for (const auto& is : s.instances)
      if (is.spawned && m_.tmpl(is.tmpl).locations[is.loc].terminal) {
        Event ev;
        ev.time = s.time;
        ev.step = step_;
        ev.instance = is.id;
        ev.tmpl = is.tmpl;
        ev.from = is.loc;
        ev.kind = EventKind::Despawn;
        ev.observer = is_observer(m_, is);
        gone.push_back(ev);
      }
    if (!gone.empty()) {
      reap_terminated(m_, s);
      for (const auto& e : gone)
        if (!emit(s, e)) return false;
      if (!notify_point(s, 0)) return false;
    }
  }

  double remaining = bound - s.time;
  if (remaining <= 0) return finish();
  ++step_;

  double cap = kInf, dmin = kInf;
  int winner = -1;
  for (int j = 0; j < static_cast<int>(s.instances.size()); ++j) {
    const InstanceState& is = s.instances[j];
    if (is_observer(m_, is)) continue;
    double d = deadline(s, is);
    cap = std::min(cap, d);
    auto w = active_window(s, is, d);
    if (!w) continue;
    DelayView v{w->first, d, w->second, m_.tmpl(is.tmpl).locations[is.loc].exit_rate};
    double delay = sample_delay(v, rng_);
    if (delay < dmin) {
      dmin = delay;
      winner = j;
    }
  }

  bool timelock = winner < 0 || dmin > cap + kTol;
  double target;
  bool at_bound;
  if (timelock) {
    if (std::isfinite(cap) && cap <= remaining) {
      target = cap;
      at_bound = false;
    } else {
      target = remaining;
      at_bound = true;
      timelock = false;
    }
  } else {
    at_bound = dmin > remaining;
    target = at_bound ? remaining : dmin;
  }

  if (!observer_urgent(s, 0, target, false)) return false;
  // Observers may have fired inside the step; the final segment starts at
  // the last of those offsets.
  if (!notify_segment(s, obs_offset_, target)) return false;
  advance(s, target);

  if (timelock) {
    deadlock_ = true;
    Event ev;
    ev.time = s.time;
    ev.step = step_;
    ev.kind = EventKind::Deadlock;
    emit(s, ev);
    notify_point(s, 0);
    return finish();
  }
  if (at_bound) {
    notify_point(s, 0);
    return finish();
  }

  auto en = enabled_active(s, winner, 0);
  if (en.empty()) en = enabled_active(s, winner, kNudge);
  if (!en.empty()) {
    int edge = pick_weighted(s.instances[winner], en);
    fire(s, winner, edge, 0);
    if (stopped_ || !notify_point(s, 0)) return false;
    if (!observer_urgent(s, 0, 0, true)) return false;
  }
  return !stopped_;
}

// ---- runs ------------------------------------------------------------------------

Run simulate(const Model& m, const SimOptions& opt) {
  Run run;
  run.seed = opt.seed;
  run.stream = opt.stream;
  run.bound = opt.bound;
  run.watch = opt.watch;
  RngStream rng(opt.seed, opt.stream);
  WatchRecorder rec(m, opt.watch);
  Chain chain(opt.watch.empty() ? nullptr : &rec, opt.listener);
  Simulator sim(m, rng, &chain, opt.record_events);
  NetworkState s = sim.initial();
  while (sim.step(s, opt.bound))
    if (sim.steps() > opt.max_steps) throw SimError("step limit exceeded (zeno behaviour?)");
  run.end_time = s.time;
  run.deadlock = sim.deadlocked();
  run.stopped_early = sim.stopped();
  run.events = sim.take_events();
  run.signals = std::move(rec.traces);
  run.final_state = std::move(s);
  return run;
}

Run simulate(const Network& net, double bound, std::uint64_t seed, const std::vector<std::string>& watch) {
  Model m(net);
  SimOptions o;
  o.bound = bound;
  o.seed = seed;
  o.watch = watch;
  return simulate(m, o);
}

std::string instance_name(const Model& m, int id, int tmpl) {
  if (const std::string* n = m.static_name(id)) return *n;
  if (tmpl < 0) return "-";
  return m.tmpl(tmpl).name + "_" + std::to_string(id);
}

std::string instance_name(const Model& m, const InstanceState& is) { return instance_name(m, is.id, is.tmpl); }

void write_events_csv(std::ostream& os, const Model& m, const Run& r) {
  os << "time_ms,instance,location,event_kind,channel\n";
  for (const auto& e : r.events) {
    std::string loc = "-";
    int l = e.to >= 0 ? e.to : e.from;
    if (e.tmpl >= 0 && l >= 0) loc = m.tmpl(e.tmpl).locations[l].name;
    os << csv::num(e.time) << ',' << (e.instance < 0 ? std::string("-") : instance_name(m, e.instance, e.tmpl))
       << ',' << loc << ',' << to_string(e.kind) << ','
       << (e.channel >= 0 ? m.channels()[e.channel].name : std::string("-")) << '\n';
  }
}

void write_trace_csv(std::ostream& os, const Trace& t) {
  os << "time_ms,value\n";
  for (const auto& [time, v] : t) os << csv::num(time) << ',' << csv::num(v) << '\n';
}

}  // namespace stasmc
