#include "stasmc/cas.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>

#include "stasmc/csv.hpp"
#include "stasmc/model_io.hpp"

namespace stasmc::cas {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::AutoLeader: return "auto_leader";
    case Mode::AutoFollower: return "auto_follower";
    case Mode::UserCtrl: return "userCtrl";
  }
  return "?";
}

const char* to_string(Submode s) {
  switch (s) {
    case Submode::ConstSpeed: return "constSpeed";
    case Submode::Acc: return "acc";
    case Submode::Dec: return "dec";
    case Submode::TurnLeft: return "turnLeft";
    case Submode::TurnRight: return "turnRight";
    case Submode::Braking: return "stop";
    case Submode::Static: return "static";
  }
  return "?";
}

const char* to_string(SignType s) {
  switch (s) {
    case SignType::Straight: return "straight";
    case SignType::MaxSpeedLimit: return "max_speed_limit";
    case SignType::MinSpeedLimit: return "min_speed_limit";
    case SignType::RightTurn: return "right_turn";
    case SignType::LeftTurn: return "left_turn";
    case SignType::Stop: return "stop";
  }
  return "?";
}

double EnergyCoeffs::for_submode(Submode s) const {
  switch (s) {
    case Submode::Acc:
    case Submode::Dec: return d;
    case Submode::TurnLeft:
    case Submode::TurnRight: return c;
    case Submode::Braking: return b;
    case Submode::ConstSpeed:
    case Submode::Static: return a;
  }
  return a;
}

SpeedTable SpeedTable::standard() {
  SpeedTable t;
  t.kmh.resize(static_cast<size_t>(t.gears * t.torques));
  for (int g = 0; g < t.gears; ++g)
    for (int q = 0; q < t.torques; ++q) t.kmh[g * t.torques + q] = std::clamp(15.0 * g - 5.0 * q, 0.0, 120.0);
  return t;
}

double SpeedTable::at(int gear, int torque) const { return kmh.at(static_cast<size_t>(gear * torques + torque)); }

void PlatoonConfig::check() const {
  auto fail = [](const std::string& m) { throw ConfigError("platoon config: " + m); };
  if (n_vehicles < 2) fail("n_vehicles must be at least 2");
  if (!(safe_distance > 0)) fail("safe_distance must be positive");
  if (!(max_gap > safe_distance)) fail("max_gap must exceed safe_distance");
  if (!(comm_loss_prob >= 0 && comm_loss_prob <= 1)) fail("comm_loss_prob must lie in [0, 1]");
  if (!(comm_timeout > 0)) fail("comm_timeout must be positive");
  for (double w : sign_distribution)
    if (!(w >= 0)) fail("sign_distribution weights must be nonnegative");
  double sum = std::accumulate(sign_distribution.begin(), sign_distribution.end(), 0.0);
  if (std::abs(sum - 1) > 1e-9) fail("sign_distribution must sum to 1");
  const auto& e = energy;
  if (!(e.b > e.d && e.d > e.c && e.c > e.a && e.a > 0)) fail("energy coefficients must satisfy b > d > c > a > 0");
  const auto& t = speed_table;
  if (t.gears < 2 || t.torques < 1 || t.kmh.size() != static_cast<size_t>(t.gears * t.torques))
    fail("speed_table shape does not match gears x torques");
  for (double v : t.kmh)
    if (!(v >= 0)) fail("speed_table entries must be nonnegative");
  for (int q = 0; q < t.torques; ++q) {
    if (t.at(0, q) != 0) fail("speed_table gear 0 must be standstill");
    for (int g = 1; g < t.gears; ++g)
      if (t.at(g, q) < t.at(g - 1, q)) fail("speed_table must be nondecreasing in gear");
  }
  for (int g : {cruise_gear, slow_gear, fast_gear})
    if (g < 1 || g >= t.gears) fail("target gears must lie in [1, gears)");
  if (!(initial_spacing > safe_distance)) fail("initial_spacing must exceed safe_distance");
  if (!(dyn_jitter >= 0 && 2 * dyn_jitter < dyn_period)) fail("dyn jitter must satisfy 0 <= 2 * jitter < period");
  for (const Interval* i : {&ctrl_idle, &ctrl_read, &ctrl_exec, &follower_fallback, &com_exec, &sign_interval,
                            &sign_hold, &reaction, &manual_switch, &driver_interval})
    if (!(i->lo >= 0 && i->hi >= i->lo)) fail("timing intervals need 0 <= lo <= hi");
  if (!(ctrl_exec.lo > ctrl_read.hi)) fail("ctrl_exec must start after ctrl_read ends");
  if (!(ctrl_exec.lo > com_exec.hi)) fail("a control cycle must outlast a transmission");
  if (!(manual_dwell > 0 && stop_dwell > 0)) fail("dwell times must be positive");
  if (!(controller_power >= 0 && com_power >= 0)) fail("device power must be nonnegative");
}

// ---- config files ---------------------------------------------------------------

namespace {

using nlohmann::json;

json interval_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("platoon config: " + key + " must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json to_json(const PlatoonConfig& c) {
  json table = json::array();
  for (int g = 0; g < c.speed_table.gears; ++g) {
    json row = json::array();
    for (int q = 0; q < c.speed_table.torques; ++q) row.push_back(c.speed_table.at(g, q));
    table.push_back(row);
  }
  return {
      {"n_vehicles", c.n_vehicles},
      {"safe_distance", c.safe_distance},
      {"max_gap", c.max_gap},
      {"comm_loss_prob", c.comm_loss_prob},
      {"comm_timeout", c.comm_timeout},
      {"sign_distribution", c.sign_distribution},
      {"energy_coeffs", {{"a", c.energy.a}, {"b", c.energy.b}, {"c", c.energy.c}, {"d", c.energy.d}}},
      {"speed_table", table},
      {"turn_location_propagation", c.turn_location_propagation},
      {"cruise_gear", c.cruise_gear},
      {"slow_gear", c.slow_gear},
      {"fast_gear", c.fast_gear},
      {"initial_spacing", c.initial_spacing},
      {"dyn_period", c.dyn_period},
      {"dyn_jitter", c.dyn_jitter},
      {"ctrl_idle", interval_json(c.ctrl_idle)},
      {"ctrl_read", interval_json(c.ctrl_read)},
      {"ctrl_exec", interval_json(c.ctrl_exec)},
      {"follower_fallback", interval_json(c.follower_fallback)},
      {"com_exec", interval_json(c.com_exec)},
      {"sign_interval", interval_json(c.sign_interval)},
      {"sign_hold", interval_json(c.sign_hold)},
      {"reaction", interval_json(c.reaction)},
      {"manual_switch", interval_json(c.manual_switch)},
      {"driver_interval", interval_json(c.driver_interval)},
      {"manual_dwell", c.manual_dwell},
      {"stop_dwell", c.stop_dwell},
      {"controller_power", c.controller_power},
      {"com_power", c.com_power},
  };
}

PlatoonConfig config_from_json(const json& j) {
  PlatoonConfig c;
  try {
    reject_unknown_keys(j,
                        {"n_vehicles", "safe_distance", "max_gap", "comm_loss_prob", "comm_timeout",
                         "sign_distribution", "energy_coeffs", "speed_table", "turn_location_propagation",
                         "cruise_gear", "slow_gear", "fast_gear", "initial_spacing", "dyn_period", "dyn_jitter",
                         "ctrl_idle", "ctrl_read", "ctrl_exec", "follower_fallback", "com_exec", "sign_interval",
                         "sign_hold", "reaction", "manual_switch", "driver_interval", "manual_dwell", "stop_dwell",
                         "controller_power", "com_power"},
                        "platoon config");
    c.n_vehicles = j.value("n_vehicles", c.n_vehicles);
    c.safe_distance = j.value("safe_distance", c.safe_distance);
    c.max_gap = j.value("max_gap", c.max_gap);
    c.comm_loss_prob = j.value("comm_loss_prob", c.comm_loss_prob);
    c.comm_timeout = j.value("comm_timeout", c.comm_timeout);
    if (j.contains("sign_distribution")) {
      const auto& d = j["sign_distribution"];
      if (!d.is_array() || d.size() != 6) throw ConfigError("platoon config: sign_distribution needs 6 weights");
      for (size_t k = 0; k < 6; ++k) c.sign_distribution[k] = d[k].get<double>();
    }
    if (j.contains("energy_coeffs")) {
      const auto& e = j["energy_coeffs"];
      reject_unknown_keys(e, {"a", "b", "c", "d"}, "energy_coeffs");
      c.energy.a = e.value("a", c.energy.a);
      c.energy.b = e.value("b", c.energy.b);
      c.energy.c = e.value("c", c.energy.c);
      c.energy.d = e.value("d", c.energy.d);
    }
    if (j.contains("speed_table")) {
      const auto& t = j["speed_table"];
      if (!t.is_array() || t.empty() || !t[0].is_array())
        throw ConfigError("platoon config: speed_table must be a gear x torque matrix");
      SpeedTable st;
      st.gears = static_cast<int>(t.size());
      st.torques = static_cast<int>(t[0].size());
      st.kmh.clear();
      for (const auto& row : t) {
        if (row.size() != t[0].size()) throw ConfigError("platoon config: speed_table rows differ in length");
        for (const auto& v : row) st.kmh.push_back(v.get<double>());
      }
      c.speed_table = std::move(st);
    }
    c.turn_location_propagation = j.value("turn_location_propagation", c.turn_location_propagation);
    c.cruise_gear = j.value("cruise_gear", c.cruise_gear);
    c.slow_gear = j.value("slow_gear", c.slow_gear);
    c.fast_gear = j.value("fast_gear", c.fast_gear);
    c.initial_spacing = j.value("initial_spacing", c.initial_spacing);
    c.dyn_period = j.value("dyn_period", c.dyn_period);
    c.dyn_jitter = j.value("dyn_jitter", c.dyn_jitter);
    for (auto [key, field] : std::initializer_list<std::pair<const char*, Interval*>>{
             {"ctrl_idle", &c.ctrl_idle},
             {"ctrl_read", &c.ctrl_read},
             {"ctrl_exec", &c.ctrl_exec},
             {"follower_fallback", &c.follower_fallback},
             {"com_exec", &c.com_exec},
             {"sign_interval", &c.sign_interval},
             {"sign_hold", &c.sign_hold},
             {"reaction", &c.reaction},
             {"manual_switch", &c.manual_switch},
             {"driver_interval", &c.driver_interval}})
      if (j.contains(key)) *field = interval_from(j[key], key);
    c.manual_dwell = j.value("manual_dwell", c.manual_dwell);
    c.stop_dwell = j.value("stop_dwell", c.stop_dwell);
    c.controller_power = j.value("controller_power", c.controller_power);
    c.com_power = j.value("com_power", c.com_power);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("platoon config: ") + e.what());
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
  c.check();
  return c;
}

PlatoonConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---- tap registry ---------------------------------------------------------------

EventBinding TapRegistry::event(const std::string& name, const std::string& tag) const {
  auto it = events.find(name);
  if (it == events.end()) throw ModelError("no exported event " + name);
  EventBinding b = it->second;
  b.tag = tag;
  return b;
}

const std::string& TapRegistry::predicate(const std::string& name) const {
  auto it = predicates.find(name);
  if (it == predicates.end()) throw ModelError("no exported predicate " + name);
  return it->second;
}

const std::string& TapRegistry::quantity(const std::string& name) const {
  auto it = quantities.find(name);
  if (it == quantities.end()) throw ModelError("no exported quantity " + name);
  return it->second;
}

nlohmann::json TapRegistry::manifest() const {
  json ev = json::object();
  for (const auto& [name, b] : events) {
    json e = json::object();
    if (!b.channel.empty()) e["channel"] = b.channel;
    if (!b.predicate.empty()) e["predicate"] = b.predicate;
    if (!b.id.empty()) e["id"] = b.id;
    ev[name] = e;
  }
  return {{"events", ev}, {"predicates", predicates}, {"quantities", quantities}};
}

// ---- network generation ---------------------------------------------------------

namespace {

std::string num(double v) {
  std::string s = csv::num(v);
  return v < 0 ? "(" + s + ")" : s;
}

std::string at(const char* arr, int i) { return std::string(arr) + "[" + std::to_string(i) + "]"; }
std::string vname(int i) { return "v" + std::to_string(i + 1); }
std::string sub_is(int i, Submode s) { return at("sub", i) + " == " + std::to_string(static_cast<int>(s)); }
std::string paren(const std::string& s) { return "(" + s + ")"; }
std::string negate(const std::string& s) { return "!(" + s + ")"; }

void append(std::vector<std::string>& to, const std::vector<std::string>& more) {
  to.insert(to.end(), more.begin(), more.end());
}

Edge edge(const std::string& from, const std::string& to, std::string guard, std::vector<std::string> updates = {},
          Sync sync = {}, double weight = 1) {
  Edge e;
  e.source = from;
  e.target = to;
  e.guard = std::move(guard);
  e.updates = std::move(updates);
  e.sync = std::move(sync);
  e.weight = weight;
  return e;
}

Sync send(const std::string& ch) { return {SyncKind::Send, ch}; }
Sync recv(const std::string& ch) { return {SyncKind::Recv, ch}; }

Location location(const std::string& name, std::vector<ClockBound> inv = {},
                  std::map<std::string, std::string> rates = {}) {
  Location l;
  l.name = name;
  l.invariant = std::move(inv);
  l.rates = std::move(rates);
  return l;
}

ClockBound upto(const std::string& clock, const std::string& bound) { return {clock, false, bound}; }

VarDecl array(const std::string& name, ValueKind kind, std::vector<double> init) {
  VarDecl v;
  v.name = name;
  v.kind = kind;
  v.size = static_cast<int>(init.size());
  v.init = std::move(init);
  return v;
}

VarDecl scalar(const std::string& name, ValueKind kind, double initial = 0) {
  VarDecl v;
  v.name = name;
  v.kind = kind;
  v.initial = initial;
  return v;
}

struct Gen {
  const PlatoonConfig& c;
  int n;
  Network net;
  TapRegistry taps;

  explicit Gen(const PlatoonConfig& cfg) : c(cfg), n(cfg.n_vehicles) {}

  std::vector<std::string> set_sub(int i, Submode s) const {
    return {at("sub", i) + " = " + std::to_string(static_cast<int>(s)),
            at("erate", i) + " = " + num(c.energy.for_submode(s)),
            at("brk", i) + " = " + (s == Submode::Braking ? "1" : "0")};
  }

  // True when no turn is pending anywhere in the platoon.
  std::string platoon_free() const {
    std::string s = "plan[0] == 0";
    for (int i = 1; i < n; ++i) s += " && " + at("done", i) + " == kseq[0]";
    return s;
  }

  // The leader plans a turn at its own position.
  std::vector<std::string> leader_turn(SignType side) const {
    bool left = side == SignType::LeftTurn;
    std::string ndx = left ? "-dy[0]" : "dy[0]";
    std::string ndy = left ? "dx[0]" : "-dx[0]";
    Submode sub = left ? Submode::TurnLeft : Submode::TurnRight;
    std::string code = std::to_string(static_cast<int>(sub));
    std::vector<std::string> u{"pdx[0] = " + ndx, "pdy[0] = " + ndy, "plan[0] = 1",       "px[0] = x[0]",
                               "py[0] = y[0]",    "pturn[0] = " + code, "kseq[0] = kseq[0] + 1",
                               "pseq[0] = kseq[0]", "ktx[0] = x[0]",  "kty[0] = y[0]",    "kdx[0] = pdx[0]",
                               "kdy[0] = pdy[0]", "kturn[0] = " + code};
    append(u, set_sub(0, sub));
    return u;
  }

  void globals() {
    std::vector<double> zeros(static_cast<size_t>(n), 0.0), ones(static_cast<size_t>(n), 1.0), xs, gear, vel, mode,
        erate, rxx;
    double v0 = c.speed_table.at(c.cruise_gear, 0);
    for (int i = 0; i < n; ++i) {
      xs.push_back((n - 1 - i) * c.initial_spacing);
      gear.push_back(c.cruise_gear);
      vel.push_back(v0);
      mode.push_back(i == 0 ? 0 : 1);
      erate.push_back(c.energy.a);
      rxx.push_back(i == 0 ? 0 : (n - i) * c.initial_spacing);
    }
    auto R = ValueKind::Real;
    auto I = ValueKind::Int;
    net.globals = {
        scalar("signType", I),
        array("speed_tab", R, c.speed_table.kmh),
        array("x", R, xs), array("y", R, zeros), array("dx", I, ones), array("dy", I, zeros),
        array("v", R, vel), array("gear", I, gear), array("torque", I, zeros), array("tg", I, gear),
        array("mode", I, mode), array("sub", I, zeros), array("erate", R, erate), array("brk", I, zeros),
        array("stopt", R, zeros), array("lastrx", R, zeros),
        // planned turn, executed by the dynamics when the point is reached; turn codes are submode values
        array("plan", I, zeros), array("px", R, zeros), array("py", R, zeros), array("pdx", I, zeros),
        array("pdy", I, zeros), array("pturn", I, zeros), array("pseq", I, zeros),
        array("done", I, zeros), array("lturn", I, zeros),
        // turn knowledge: the leader's own record, or what a follower was told
        array("kseq", I, zeros), array("ktx", R, zeros), array("kty", R, zeros), array("kdx", I, zeros),
        array("kdy", I, zeros), array("kturn", I, zeros),
        // last delivered message from the vehicle ahead, initially its start state
        array("rxx", R, rxx), array("rxy", R, zeros), array("rxg", I, gear),
        // transmit buffers
        array("sx", R, zeros), array("sy", R, zeros), array("sg", I, zeros), array("sid", I, zeros),
        array("sks", I, zeros), array("sktx", R, zeros), array("skty", R, zeros), array("skdx", I, zeros),
        array("skdy", I, zeros), array("skturn", I, zeros),
        // driver requests
        array("steer", I, zeros), array("brq", I, zeros), array("gup", I, zeros), array("gdn", I, zeros),
    };
    for (const char* ch : {"sign"}) net.channels.push_back({ch, ChannelKind::Broadcast});
    for (int i = 0; i < n; ++i)
      for (const char* p : {"dyn_", "crd_", "cout_", "msg_"})
        net.channels.push_back({p + std::to_string(i), ChannelKind::Broadcast});
  }

  void add(Template t) {
    InstanceDecl d;
    d.name = t.name;
    d.tmpl = t.name;
    net.templates.push_back(std::move(t));
    net.instances.push_back(std::move(d));
  }

  void sign() {
    Template t;
    t.name = "sign";
    t.clocks = {{"c", 0}};
    const Interval& iv = c.sign_interval;
    const Interval& h = c.sign_hold;
    t.locations = {location("wait", {upto("c", num(iv.hi))}), location("hold", {upto("c", num(h.hi))})};
    t.initial = "wait";
    std::string ready = "c >= " + num(iv.lo);
    for (int k = 0; k < 6; ++k) {
      double w = c.sign_distribution[k];
      if (w <= 0) continue;
      bool turn = k == static_cast<int>(SignType::RightTurn) || k == static_cast<int>(SignType::LeftTurn);
      t.edges.push_back(edge("wait", "hold", turn ? ready + " && " + platoon_free() : ready,
                             {"signType = " + std::to_string(k), "c = 0"}, send("sign"), w));
    }
    // While a turn is pending the road has no corner: the turn weight is spent on no sign.
    double wt = c.sign_distribution[3] + c.sign_distribution[4];
    if (wt > 0) t.edges.push_back(edge("wait", "wait", ready + " && " + negate(platoon_free()), {"c = 0"}, {}, wt));
    t.edges.push_back(edge("hold", "wait", "c >= " + num(h.lo), {"signType = 0", "c = 0"}));
    add(std::move(t));
  }

  void planner() {
    Template t;
    t.name = "v1_plan";
    t.clocks = {{"r", 0}};
    t.vars = {scalar("sig", ValueKind::Int)};
    t.locations = {location("idle"), location("react", {upto("r", num(c.reaction.hi))})};
    t.initial = "idle";
    t.edges.push_back(edge("idle", "react", "mode[0] == 0", {"sig = signType", "r = 0"}, recv("sign")));
    std::string go = "r >= " + num(c.reaction.lo);
    std::string moving = "sub[0] < 5";
    std::string restart = "sub[0] == 6 && time - stopt[0] >= " + num(c.stop_dwell);
    // Reacting consumes the sign.
    auto act = [&](int sig, const std::vector<std::pair<std::string, std::vector<std::string>>>& cases) {
      std::string none;
      for (auto [g, u] : cases) {
        u.push_back("signType = 0");
        t.edges.push_back(edge("react", "idle", go + " && sig == " + std::to_string(sig) + " && " + paren(g), u));
        none += (none.empty() ? "" : " || ") + paren(g);
      }
      t.edges.push_back(
          edge("react", "idle", go + " && sig == " + std::to_string(sig) + " && " + negate(none), {"signType = 0"}));
    };
    auto with_sub = [&](std::vector<std::string> u, Submode s) {
      append(u, set_sub(0, s));
      return u;
    };
    act(0, {{restart, with_sub({"tg[0] = " + std::to_string(c.cruise_gear)}, Submode::Acc)}});
    act(1, {{moving, {"tg[0] = " + std::to_string(c.slow_gear)}}});
    act(2, {{moving, {"tg[0] = " + std::to_string(c.fast_gear)}},
            {restart, with_sub({"tg[0] = " + std::to_string(c.fast_gear)}, Submode::Acc)}});
    act(3, {{moving + " && plan[0] == 0", leader_turn(SignType::RightTurn)}});
    act(4, {{moving + " && plan[0] == 0", leader_turn(SignType::LeftTurn)}});
    act(5, {{moving, with_sub({"tg[0] = 0"}, Submode::Braking)}});
    add(std::move(t));
  }

  // Message delivery from vehicle s into vehicle r's receive buffers.
  std::vector<std::string> deliver(int r, int s) const {
    std::vector<std::string> u{at("lastrx", r) + " = time"};
    if (r == 0) return u;
    for (auto [dst, src] : std::initializer_list<std::pair<const char*, const char*>>{{"rxx", "sx"},
                                                                                      {"rxy", "sy"},
                                                                                      {"rxg", "sg"},
                                                                                      {"kseq", "sks"},
                                                                                      {"ktx", "sktx"},
                                                                                      {"kty", "skty"},
                                                                                      {"kdx", "skdx"},
                                                                                      {"kdy", "skdy"},
                                                                                      {"kturn", "skturn"}})
      u.push_back(at(dst, r) + " = " + at(src, s));
    return u;
  }

  // Lossy reception of `msg_s` in location `loc`; delivered edges go to `to`.
  void receive(Template& t, int r, int s, const std::string& loc, const std::string& to,
               std::vector<std::string> extra = {}) const {
    std::string ch = "msg_" + std::to_string(s);
    double p = c.comm_loss_prob;
    if (p < 1) {
      auto u = deliver(r, s);
      append(u, extra);
      t.edges.push_back(edge(loc, to, "", u, recv(ch), 1 - p));
    }
    if (p > 0) t.edges.push_back(edge(loc, loc, "", {}, recv(ch), p));
  }

  std::vector<Location> ctrl_locations(const Interval& idle) const {
    std::string pw = num(c.controller_power);
    return {location("idle", {upto("c", num(idle.hi))}, {{"ce", "0"}}),
            location("sense", {upto("c", num(c.ctrl_read.hi))}, {{"ce", pw}}),
            location("decide", {upto("c", num(c.ctrl_exec.hi))}, {{"ce", pw}})};
  }

  void leader_ctrl() {
    Template t;
    t.name = "v1_ctrl";
    t.clocks = {{"c", 0}, {"ce", 0}};
    t.vars = {scalar("cid", ValueKind::Int)};
    t.locations = ctrl_locations(c.ctrl_idle);
    t.initial = "idle";
    t.edges.push_back(edge("idle", "sense", "c >= " + num(c.ctrl_idle.lo), {"c = 0", "ce = 0", "cid = cid + 1"}));
    t.edges.push_back(edge("sense", "decide", "c >= " + num(c.ctrl_read.lo), {}, send("crd_0")));
    std::string go = "c >= " + num(c.ctrl_exec.lo) + " && ";
    auto out = [&](const std::string& g, std::vector<std::string> u) {
      u.push_back("c = 0");
      t.edges.push_back(edge("decide", "idle", go + g, std::move(u), send("cout_0")));
    };
    auto with_sub = [&](std::vector<std::string> u, Submode s) {
      append(u, set_sub(0, s));
      return u;
    };
    out("sub[0] == 6", {});
    out("sub[0] == 5 && gear[0] >= 2", {"gear[0] = gear[0] - 2"});
    out("sub[0] == 5 && gear[0] < 2 && v[0] > 0", {"gear[0] = 0"});
    out("sub[0] == 5 && gear[0] < 2 && v[0] == 0", with_sub({"gear[0] = 0", "stopt[0] = time"}, Submode::Static));
    // The turn submode is kept until the dynamics reach the turn point.
    std::string turning = "plan[0] == 1 && (sub[0] == 3 || sub[0] == 4)";
    std::string drive = "sub[0] < 5 && !(" + turning + ")";
    out(turning, {});
    out(drive + " && gear[0] < tg[0]", with_sub({"gear[0] = gear[0] + 1"}, Submode::Acc));
    out(drive + " && gear[0] > tg[0]", with_sub({"gear[0] = gear[0] - 1"}, Submode::Dec));
    out(drive + " && gear[0] == tg[0]", set_sub(0, Submode::ConstSpeed));
    for (const char* loc : {"idle", "sense", "decide"}) receive(t, 0, 1, loc, loc);
    add(std::move(t));
  }

  std::vector<std::string> follower_plan(int i, bool propagate) const {
    std::vector<std::string> u{at("plan", i) + " = 1"};
    if (propagate) {
      u.push_back(at("px", i) + " = " + at("ktx", i));
      u.push_back(at("py", i) + " = " + at("kty", i));
    } else {
      u.push_back(at("px", i) + " = " + at("x", i));
      u.push_back(at("py", i) + " = " + at("y", i));
    }
    for (auto [dst, src] : std::initializer_list<std::pair<const char*, const char*>>{
             {"pdx", "kdx"}, {"pdy", "kdy"}, {"pturn", "kturn"}, {"pseq", "kseq"}})
      u.push_back(at(dst, i) + " = " + at(src, i));
    return u;
  }

  void follower_ctrl(int i) {
    int s = i - 1;
    Template t;
    t.name = vname(i) + "_ctrl";
    t.clocks = {{"c", 0}, {"ce", 0}};
    t.vars = {scalar("cid", ValueKind::Int), scalar("lid", ValueKind::Int)};
    t.locations = ctrl_locations(c.follower_fallback);
    t.initial = "idle";
    std::vector<std::string> start{"c = 0", "ce = 0", "cid = cid + 1"};
    auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
      append(a, b);
      return a;
    };
    receive(t, i, s, "idle", "sense", with({"lid = " + at("sid", s)}, start));
    t.edges.push_back(edge("idle", "sense", "c >= " + num(c.follower_fallback.lo), with({"lid = 0"}, start)));
    for (const char* loc : {"sense", "decide"}) receive(t, i, s, loc, loc);

    std::string read = "c >= " + num(c.ctrl_read.lo);
    std::string crd = "crd_" + std::to_string(i);
    std::string manual = at("mode", i) + " == 2";
    std::string fresh_turn = at("kseq", i) + " > " + at("done", i) + " && " + at("plan", i) + " == 0";
    t.edges.push_back(edge("sense", "decide", read + " && " + manual,
                           {at("rxx", i) + " = " + at("x", s), at("rxy", i) + " = " + at("y", s),
                            at("rxg", i) + " = " + at("gear", s)},
                           send(crd)));
    t.edges.push_back(edge("sense", "decide", read + " && !(" + manual + ") && " + fresh_turn,
                           follower_plan(i, c.turn_location_propagation), send(crd)));
    t.edges.push_back(
        edge("sense", "decide", read + " && !(" + manual + ") && " + negate(fresh_turn), {}, send(crd)));

    std::string go = "c >= " + num(c.ctrl_exec.lo) + " && ";
    std::string cout = "cout_" + std::to_string(i);
    auto out = [&](const std::string& g, std::vector<std::string> u) {
      u.push_back("c = 0");
      t.edges.push_back(edge("decide", "idle", go + g, std::move(u), send(cout)));
    };
    auto with_sub = [&](std::vector<std::string> u, Submode sm) {
      append(u, set_sub(i, sm));
      return u;
    };
    std::string ex = paren(at("rxx", i) + " - " + at("x", i)), ey = paren(at("rxy", i) + " - " + at("y", i));
    std::string gap2 = paren(ex + " * " + ex + " + " + ey + " * " + ey);
    double half = c.safe_distance / 2;
    std::string near = gap2 + " < " + num(half * half);
    std::string ok = gap2 + " >= " + num(half * half);
    std::string g = at("gear", i), lg = at("rxg", i), vi = at("v", i);
    int top = c.speed_table.gears - 1;
    std::string close = gap2 + " < " + num(c.safe_distance * c.safe_distance) + " && " + g + " > 0";
    std::string far = gap2 + " > " + num(c.max_gap * c.max_gap) + " && " + g + " < " + std::to_string(top);
    std::string match = ok + " && " + lg + " == " + g;
    std::string steady = match + " && " + negate(close) + " && " + negate(far);
    out(near + " && " + vi + " > 0", with_sub({g + " = 0"}, Submode::Braking));
    out(near + " && " + vi + " == 0", with_sub({g + " = 0"}, Submode::Static));
    out(ok + " && " + lg + " > " + g, with_sub({g + " = " + g + " + 1"}, Submode::Acc));
    out(ok + " && " + lg + " < " + g + " && " + g + " - 2 >= " + lg, with_sub({g + " = " + g + " - 2"}, Submode::Dec));
    out(ok + " && " + lg + " < " + g + " && " + g + " - 2 < " + lg, with_sub({g + " = " + lg}, Submode::Dec));
    out(match + " && " + close, with_sub({g + " = " + g + " - 1"}, Submode::Dec));
    out(match + " && " + far, with_sub({g + " = " + g + " + 1"}, Submode::Acc));
    out(steady + " && !(" + g + " == 0 && " + vi + " == 0)", set_sub(i, Submode::ConstSpeed));
    out(steady + " && " + g + " == 0 && " + vi + " == 0", set_sub(i, Submode::Static));
    add(std::move(t));
  }

  void com(int i) {
    Template t;
    t.name = vname(i) + "_com";
    t.clocks = {{"c", 0}, {"ee", 0}};
    t.locations = {location("idle", {}, {{"ee", "0"}}),
                   location("busy", {upto("c", num(c.com_exec.hi))}, {{"ee", num(c.com_power)}})};
    t.initial = "idle";
    std::vector<std::string> snap{"c = 0", "ee = 0", at("sid", i) + " = " + vname(i) + "_ctrl.cid"};
    for (auto [dst, src] : std::initializer_list<std::pair<const char*, const char*>>{{"sx", "x"},
                                                                                      {"sy", "y"},
                                                                                      {"sg", "gear"},
                                                                                      {"sks", "kseq"},
                                                                                      {"sktx", "ktx"},
                                                                                      {"skty", "kty"},
                                                                                      {"skdx", "kdx"},
                                                                                      {"skdy", "kdy"},
                                                                                      {"skturn", "kturn"}})
      snap.push_back(at(dst, i) + " = " + at(src, i));
    t.edges.push_back(edge("idle", "busy", "", snap, recv("cout_" + std::to_string(i))));
    t.edges.push_back(edge("busy", "idle", "c >= " + num(c.com_exec.lo), {}, send("msg_" + std::to_string(i))));
    add(std::move(t));
  }

  void dynamics(int i) {
    Template t;
    t.name = vname(i) + "_dyn";
    t.clocks = {{"t", 0}, {"since", 0}};
    t.vars = {scalar("k", ValueKind::Int)};
    std::string P = num(c.dyn_period), J = num(c.dyn_jitter);
    t.locations = {location("run", {upto("t", P + " * (k + 1) + " + J)})};
    t.initial = "run";
    std::string due = "t >= " + P + " * (k + 1) - " + J;
    std::string dist = "(" + at("px", i) + " - " + at("x", i) + ") * " + at("dx", i) + " + (" + at("py", i) + " - " +
                       at("y", i) + ") * " + at("dy", i);
    std::string reach = at("v", i) + " * since / 3600";
    std::string speed = at("v", i) + " = speed_tab[" + at("gear", i) + " * " + std::to_string(c.speed_table.torques) +
                        " + " + at("torque", i) + "]";
    std::vector<std::string> move{at("x", i) + " = " + at("x", i) + " + " + at("v", i) + " * " + at("dx", i) +
                                      " * since / 3600",
                                  at("y", i) + " = " + at("y", i) + " + " + at("v", i) + " * " + at("dy", i) +
                                      " * since / 3600",
                                  speed, "since = 0", "k = k + 1"};
    std::string ch = "dyn_" + std::to_string(i);
    t.edges.push_back(edge("run", "run", due + " && " + at("plan", i) + " == 0", move, send(ch)));
    t.edges.push_back(edge("run", "run", due + " && " + at("plan", i) + " == 1 && " + dist + " > " + reach, move,
                           send(ch)));
    std::vector<std::string> turn{at("x", i) + " = " + at("px", i),    at("y", i) + " = " + at("py", i),
                                  at("dx", i) + " = " + at("pdx", i),  at("dy", i) + " = " + at("pdy", i),
                                  at("plan", i) + " = 0",              at("done", i) + " = " + at("pseq", i),
                                  at("lturn", i) + " = " + at("pturn", i), at("sub", i) + " = " + at("pturn", i),
                                  at("erate", i) + " = " + num(c.energy.c), at("brk", i) + " = 0",
                                  speed, "since = 0", "k = k + 1"};
    t.edges.push_back(edge("run", "run", due + " && " + at("plan", i) + " == 1 && " + dist + " <= " + reach, turn,
                           send(ch)));
    add(std::move(t));
  }

  void driver(int i) {
    Template t;
    t.name = vname(i) + "_driver";
    t.clocks = {{"w", 0}, {"d", 0}, {"a", 0}};
    std::string rx = at("lastrx", i);
    t.locations = {location("auto", {upto("w", rx + " + " + num(c.comm_timeout))}),
                   location("lost", {upto("d", num(c.manual_switch.hi))}), location("manual")};
    t.initial = "auto";
    t.edges.push_back(edge("auto", "lost", "w >= " + rx + " + " + num(c.comm_timeout), {"d = 0"}));
    t.edges.push_back(edge("lost", "manual", "d >= " + num(c.manual_switch.lo),
                           {at("mode", i) + " = 2", "d = 0", "a = 0"}));
    // Automatic control resumes only while messages are arriving again.
    t.edges.push_back(edge("manual", "auto", "d >= " + num(c.manual_dwell) + " && w - " + rx + " < 500",
                           {at("mode", i) + " = " + (i == 0 ? "0" : "1"), "d = 0"}));
    if (i == 0) {
      t.vars = {scalar("act", ValueKind::Int)};
      t.locations[2].invariant = {upto("a", num(c.driver_interval.hi))};
      t.locations.push_back(location("act", {upto("a", num(c.reaction.hi))}));
      std::string ready = "a >= " + num(c.driver_interval.lo);
      std::string moving = "sub[0] < 5";
      int top = c.speed_table.gears - 1;
      auto request = [&](int code, const std::string& g, const std::string& var, int value) {
        t.edges.push_back(edge("manual", "act", ready + " && " + g,
                               {"act = " + std::to_string(code), var + " = " + std::to_string(value), "a = 0"}));
      };
      request(1, moving + " && " + platoon_free(), "steer[0]", 1);
      request(2, moving + " && " + platoon_free(), "steer[0]", 2);
      request(3, moving, "brq[0]", 1);
      request(4, "sub[0] != 5 && gear[0] < " + std::to_string(top), "gup[0]", 1);
      request(5, moving + " && gear[0] > 0", "gdn[0]", 1);
      t.edges.push_back(edge("manual", "manual", ready, {"a = 0"}));
      std::string go = "a >= " + num(c.reaction.lo) + " && act == ";
      auto apply = [&](int code, std::vector<std::string> u) {
        u.push_back("a = 0");
        t.edges.push_back(edge("act", "manual", go + std::to_string(code), std::move(u)));
      };
      auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
        append(a, b);
        return a;
      };
      apply(1, with({"steer[0] = 0"}, leader_turn(SignType::LeftTurn)));
      apply(2, with({"steer[0] = 0"}, leader_turn(SignType::RightTurn)));
      apply(3, with({"brq[0] = 0", "tg[0] = 0"}, set_sub(0, Submode::Braking)));
      apply(4, with({"gup[0] = 0", "tg[0] = gear[0] + 1"}, set_sub(0, Submode::Acc)));
      apply(5, with({"gdn[0] = 0", "tg[0] = gear[0] - 1"}, set_sub(0, Submode::Dec)));
    }
    add(std::move(t));
  }

  void energy(int i) {
    Template t;
    t.name = vname(i) + "_energy";
    t.clocks = {{"total", 0}, {"braking", 0}};
    std::string rate = at("erate", i) + " * " + at("v", i) + " / 1000";
    t.locations = {location("meter", {}, {{"total", rate}, {"braking", at("brk", i) + " * " + rate}})};
    t.initial = "meter";
    add(std::move(t));
  }

  void registry() {
    auto ev = [&](const std::string& name, std::string channel, std::string predicate, std::string id = "") {
      EventBinding b;
      b.channel = std::move(channel);
      b.predicate = std::move(predicate);
      b.id = std::move(id);
      taps.events[name] = b;
    };
    auto& P = taps.predicates;
    auto& Q = taps.quantities;
    ev("sign", "sign", "");
    P["sign.stop"] = "signType == 5";
    P["sign.left_turn"] = "signType == 4";
    P["sign.right_turn"] = "signType == 3";
    std::string commufail, all_stopped;
    for (int i = 0; i < n; ++i) {
      std::string v = vname(i), s = std::to_string(i);
      ev(v + ".dyn", "dyn_" + s, "");
      ev(v + ".ctrl_in", "", v + "_ctrl.sense", v + "_ctrl.cid");
      ev(v + ".ctrl_read", "crd_" + s, "");
      ev(v + ".ctrl_out", "cout_" + s, "", v + "_ctrl.cid");
      if (i > 0) ev(v + ".ctrl_out_lead", "cout_" + s, "", v + "_ctrl.lid");
      ev(v + ".com_in", "cout_" + s, "", at("sid", i));
      ev(v + ".com_out", "msg_" + s, "", at("sid", i));
      ev(v + ".manual", "", at("mode", i) + " == 2");
      P[v + ".auto"] = at("mode", i) + " != 2";
      P[v + ".manual"] = at("mode", i) + " == 2";
      P[v + ".msg_missing"] = v + "_driver.lost";
      for (Submode m : {Submode::ConstSpeed, Submode::Acc, Submode::Dec, Submode::TurnLeft, Submode::TurnRight,
                        Submode::Braking, Submode::Static})
        P[v + "." + to_string(m)] = sub_is(i, m);
      P[v + ".stopped"] = at("v", i) + " == 0";
      P[v + ".last_turn_left"] = at("lturn", i) + " == " + std::to_string(static_cast<int>(Submode::TurnLeft));
      P[v + ".last_turn_right"] = at("lturn", i) + " == " + std::to_string(static_cast<int>(Submode::TurnRight));
      Q[v + ".braking_energy"] = v + "_energy.braking";
      Q[v + ".total_energy"] = v + "_energy.total";
      Q[v + ".ctrl_energy"] = v + "_ctrl.ce";
      Q[v + ".com_energy"] = v + "_com.ee";
      Q[v + ".x"] = at("x", i);
      Q[v + ".y"] = at("y", i);
      Q[v + ".velocity"] = at("v", i);
      Q[v + ".gear"] = at("gear", i);
      commufail += (commufail.empty() ? "" : " || ") + v + "_driver.lost";
      all_stopped += (all_stopped.empty() ? "" : " && ") + at("v", i) + " == 0";
      if (i == 0) continue;
      std::string j = std::to_string(i - 1), k = s, pair = vname(i - 1) + "_" + v;
      std::string ex = "(x[" + j + "] - x[" + k + "])", ey = "(y[" + j + "] - y[" + k + "])";
      std::string d2 = "(" + ex + " * " + ex + " + " + ey + " * " + ey + ")";
      Q[pair + ".dist_sq"] = d2;
      P[pair + ".too_close"] = d2 + " < " + num(c.safe_distance * c.safe_distance);
      P[pair + ".too_far"] = d2 + " > " + num(c.max_gap * c.max_gap);
      P[pair + ".lead_faster"] = "v[" + j + "] > v[" + k + "]";
      P[pair + ".lead_slower"] = "v[" + j + "] < v[" + k + "]";
      P[pair + ".both_east"] = "dx[" + j + "] == 1 && dx[" + k + "] == 1";
      P[pair + ".lead_ahead_x"] = "x[" + j + "] > x[" + k + "]";
      P[pair + ".same_direction"] = "dx[" + j + "] == dx[" + k + "] && dy[" + j + "] == dy[" + k + "]";
      P[pair + ".same_lane"] = "x[" + j + "] == x[" + k + "] || y[" + j + "] == y[" + k + "]";
    }
    P["v1.steer_left_req"] = "steer[0] == 1";
    P["v1.steer_right_req"] = "steer[0] == 2";
    P["v1.brake_req"] = "brq[0] == 1";
    P["v1.gear_up_req"] = "gup[0] == 1";
    P["v1.gear_down_req"] = "gdn[0] == 1";
    P["commufail"] = commufail;
    P["all.stopped"] = all_stopped;
  }
};

}  // namespace

Platoon build_platoon(const PlatoonConfig& config) {
  config.check();
  Gen g(config);
  g.globals();
  g.sign();
  g.planner();
  g.leader_ctrl();
  for (int i = 1; i < g.n; ++i) g.follower_ctrl(i);
  for (int i = 0; i < g.n; ++i) {
    g.com(i);
    g.dynamics(i);
    g.driver(i);
    g.energy(i);
  }
  g.registry();
  auto rep = validate(g.net);
  if (!rep.ok()) throw ModelError("generated platoon is invalid: " + rep.to_string());
  return {std::move(g.net), std::move(g.taps), config};
}

Network enable_refinement(const Network& platoon, bool on) {
  Network out = platoon;
  static const std::regex follower("v([0-9]+)_ctrl");
  static const std::regex target(R"(^p([xy])\[([0-9]+)\] = .*$)");
  for (auto& t : out.templates) {
    std::smatch m;
    if (!std::regex_match(t.name, m, follower) || m[1] == "1") continue;
    for (auto& e : t.edges)
      for (auto& u : e.updates) {
        std::smatch um;
        if (!std::regex_match(u, um, target)) continue;
        std::string axis = um[1], idx = um[2];
        u = "p" + axis + "[" + idx + "] = " + (on ? "kt" + axis : axis) + "[" + idx + "]";
      }
  }
  return out;
}

VehicleState vehicle_dynamics_step(const VehicleState& s, int gear, int torque, double dt,
                                   const PlatoonConfig& config, std::vector<std::string>* warnings) {
  if (!(dt > 0)) throw std::invalid_argument("vehicle_dynamics_step: dt must be positive");
  const SpeedTable& t = config.speed_table;
  int g = std::clamp(gear, 0, t.gears - 1), q = std::clamp(torque, 0, t.torques - 1);
  if ((g != gear || q != torque) && warnings)
    warnings->push_back("speed table lookup (" + std::to_string(gear) + ", " + std::to_string(torque) +
                        ") clamped to (" + std::to_string(g) + ", " + std::to_string(q) + ")");
  VehicleState n = s;
  n.gear = g;
  n.torque = q;
  n.velocity = t.at(g, q);
  n.x += n.velocity * s.dx * dt / 3600;
  n.y += n.velocity * s.dy * dt / 3600;
  double e = config.energy.for_submode(s.sub) * n.velocity * dt / 1000;
  n.total_energy += e;
  if (s.sub == Submode::Braking) n.braking_energy += e;
  return n;
}

Network mutual_exclusion_fixture(bool safe, int n) {
  if (n < 2) throw std::invalid_argument("mutual exclusion fixture needs at least two processes");
  Network net;
  net.globals = {scalar("lock", ValueKind::Int)};
  for (int i = 0; i < n; ++i) {
    Template t;
    t.name = "p" + std::to_string(i);
    t.clocks = {{"c", 0}};
    t.locations = {location("idle", {upto("c", "1")}), location("check", {upto("c", "3")}),
                   location("cs", {upto("c", "20")}), location("done")};
    t.initial = "idle";
    std::string id = std::to_string(i + 1);
    t.edges.push_back(edge("idle", "check", "", {"c = 0"}));
    t.edges.push_back(edge("check", "cs", "c >= 2 && lock == 0", {"lock = " + id, "c = 0"}));
    t.edges.push_back(edge("check", "done", "c >= 2 && lock != 0", {}));
    if (!safe) t.edges.push_back(edge("check", "cs", "c >= 2 && lock != 0", {"lock = " + id, "c = 0"}));
    t.edges.push_back(edge("cs", "done", "c >= 10", {"lock = 0"}));
    InstanceDecl d;
    d.name = t.name;
    d.tmpl = t.name;
    net.templates.push_back(std::move(t));
    net.instances.push_back(std::move(d));
  }
  return net;
}

std::string mutual_exclusion_predicate(int n) {
  std::string s;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      s += (s.empty() ? "" : " && ") + ("!(p" + std::to_string(i) + ".cs && p" + std::to_string(j) + ".cs)");
  return s;
}

}  // namespace stasmc::cas
