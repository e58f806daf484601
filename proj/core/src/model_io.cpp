#include "stasmc/model_io.hpp"

#include <fstream>
#include <set>

namespace stasmc {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ModelError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) throw ModelError(where + ": unknown key '" + it.key() + "'");
}

ValueKind parse_kind(const std::string& s) {
  if (s == "int") return ValueKind::Int;
  if (s == "bool") return ValueKind::Bool;
  if (s == "real" || s == "double") return ValueKind::Real;
  throw ModelError("unknown value kind '" + s + "'");
}

ClockBound parse_clock_bound(const std::string& text) {
  auto pos = text.find('<');
  if (pos == std::string::npos) throw ModelError("invariant must be 'clock <= bound': " + text);
  ClockBound b;
  b.strict = !(pos + 1 < text.size() && text[pos + 1] == '=');
  auto trim = [](std::string s) {
    auto a = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, e - a + 1);
  };
  b.clock = trim(text.substr(0, pos));
  b.bound = trim(text.substr(pos + (b.strict ? 1 : 2)));
  if (b.clock.empty() || b.bound.empty()) throw ModelError("malformed invariant: " + text);
  return b;
}

namespace {

VarDecl var_from(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"name", "kind", "initial", "size", "init"}, where);
  VarDecl v;
  v.name = j.at("name").get<std::string>();
  v.kind = parse_kind(j.value("kind", "int"));
  if (j.contains("initial")) {
    const json& i = j["initial"];
    v.initial = i.is_boolean() ? (i.get<bool>() ? 1.0 : 0.0) : i.get<double>();
  }
  v.size = j.value("size", 0);
  if (j.contains("init"))
    for (const auto& x : j["init"]) v.init.push_back(x.is_boolean() ? (x.get<bool>() ? 1.0 : 0.0) : x.get<double>());
  return v;
}

json var_to(const VarDecl& v) {
  json j = {{"name", v.name}, {"kind", to_string(v.kind)}, {"initial", v.initial}};
  if (v.size > 0) j["size"] = v.size;
  if (!v.init.empty()) j["init"] = v.init;
  return j;
}

Sync sync_from(const json& j, const std::string& where) {
  Sync s;
  if (j.is_string()) {
    std::string t = j.get<std::string>();
    auto sp = t.find(' ');
    if (sp == std::string::npos) throw ModelError(where + ": sync must be 'send <ch>' or 'recv <ch>'");
    std::string k = t.substr(0, sp);
    s.channel = t.substr(sp + 1);
    if (k == "send" || k == "!") s.kind = SyncKind::Send;
    else if (k == "recv" || k == "?") s.kind = SyncKind::Recv;
    else throw ModelError(where + ": unknown sync kind '" + k + "'");
    return s;
  }
  reject_unknown_keys(j, {"kind", "channel"}, where);
  std::string k = j.at("kind").get<std::string>();
  s.kind = k == "send" ? SyncKind::Send : k == "recv" ? SyncKind::Recv : SyncKind::None;
  if (k != "send" && k != "recv" && k != "none") throw ModelError(where + ": unknown sync kind '" + k + "'");
  s.channel = j.value("channel", "");
  return s;
}

}  // namespace

Network network_from_json(const json& j) {
  reject_unknown_keys(j, {"channels", "globals", "templates", "instances"}, "model");
  Network n;
  for (const auto& c : j.value("channels", json::array())) {
    reject_unknown_keys(c, {"name", "kind"}, "channel");
    Channel ch;
    ch.name = c.at("name").get<std::string>();
    std::string k = c.value("kind", "binary");
    if (k == "binary") ch.kind = ChannelKind::Binary;
    else if (k == "broadcast") ch.kind = ChannelKind::Broadcast;
    else throw ModelError("channel " + ch.name + ": unknown kind '" + k + "'");
    n.channels.push_back(ch);
  }
  for (const auto& g : j.value("globals", json::array())) n.globals.push_back(var_from(g, "global"));
  for (const auto& tj : j.value("templates", json::array())) {
    reject_unknown_keys(tj, {"name", "params", "clocks", "vars", "locations", "initial", "edges", "spawnable", "observer"},
                        "template");
    Template t;
    t.name = tj.at("name").get<std::string>();
    std::string where = "template " + t.name;
    for (const auto& p : tj.value("params", json::array())) {
      reject_unknown_keys(p, {"name", "kind"}, where + " param");
      t.params.push_back({p.at("name").get<std::string>(), parse_kind(p.value("kind", "int"))});
    }
    for (const auto& c : tj.value("clocks", json::array())) {
      if (c.is_string()) {
        t.clocks.push_back({c.get<std::string>(), 0.0});
        continue;
      }
      reject_unknown_keys(c, {"name", "initial"}, where + " clock");
      t.clocks.push_back({c.at("name").get<std::string>(), c.value("initial", 0.0)});
    }
    for (const auto& v : tj.value("vars", json::array())) t.vars.push_back(var_from(v, where + " var"));
    for (const auto& lj : tj.value("locations", json::array())) {
      reject_unknown_keys(lj, {"name", "invariant", "rates", "exit_rate", "labels"}, where + " location");
      Location l;
      l.name = lj.at("name").get<std::string>();
      for (const auto& inv : lj.value("invariant", json::array())) l.invariant.push_back(parse_clock_bound(inv));
      const json rates = lj.value("rates", json::object());
      for (auto it = rates.begin(); it != rates.end(); ++it)
        l.rates[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
      l.exit_rate = lj.value("exit_rate", 1.0);
      for (const auto& lb : lj.value("labels", json::array())) l.labels.insert(lb.get<std::string>());
      t.locations.push_back(l);
    }
    t.initial = tj.value("initial", t.locations.empty() ? std::string() : t.locations.front().name);
    for (const auto& ej : tj.value("edges", json::array())) {
      reject_unknown_keys(ej, {"source", "target", "guard", "sync", "weight", "updates", "spawn"}, where + " edge");
      Edge e;
      e.source = ej.at("source").get<std::string>();
      e.target = ej.at("target").get<std::string>();
      e.guard = ej.value("guard", "");
      if (ej.contains("sync") && !ej["sync"].is_null()) e.sync = sync_from(ej["sync"], where + " edge");
      e.weight = ej.value("weight", 1.0);
      for (const auto& u : ej.value("updates", json::array())) e.updates.push_back(u.get<std::string>());
      if (ej.contains("spawn")) {
        reject_unknown_keys(ej["spawn"], {"template", "args"}, where + " spawn");
        Spawn s;
        s.tmpl = ej["spawn"].at("template").get<std::string>();
        for (const auto& a : ej["spawn"].value("args", json::array()))
          s.args.push_back(a.is_string() ? a.get<std::string>() : a.dump());
        e.spawn = s;
      }
      t.edges.push_back(e);
    }
    t.spawnable = tj.value("spawnable", false);
    t.observer = tj.value("observer", false);
    n.templates.push_back(t);
  }
  for (const auto& ij : j.value("instances", json::array())) {
    reject_unknown_keys(ij, {"name", "template", "args"}, "instance");
    InstanceDecl d;
    d.name = ij.at("name").get<std::string>();
    d.tmpl = ij.at("template").get<std::string>();
    for (const auto& a : ij.value("args", json::array()))
      d.args.push_back(a.is_boolean() ? (a.get<bool>() ? 1.0 : 0.0) : a.get<double>());
    n.instances.push_back(d);
  }
  return n;
}

json network_to_json(const Network& n) {
  json j;
  j["channels"] = json::array();
  for (const auto& c : n.channels)
    j["channels"].push_back({{"name", c.name}, {"kind", c.kind == ChannelKind::Binary ? "binary" : "broadcast"}});
  j["globals"] = json::array();
  for (const auto& g : n.globals) j["globals"].push_back(var_to(g));
  j["templates"] = json::array();
  for (const auto& t : n.templates) {
    json tj = {{"name", t.name}, {"initial", t.initial}};
    tj["params"] = json::array();
    for (const auto& p : t.params) tj["params"].push_back({{"name", p.name}, {"kind", to_string(p.kind)}});
    tj["clocks"] = json::array();
    for (const auto& c : t.clocks) tj["clocks"].push_back({{"name", c.name}, {"initial", c.initial}});
    tj["vars"] = json::array();
    for (const auto& v : t.vars) tj["vars"].push_back(var_to(v));
    tj["locations"] = json::array();
    for (const auto& l : t.locations) {
      json lj = {{"name", l.name}, {"exit_rate", l.exit_rate}};
      lj["invariant"] = json::array();
      for (const auto& b : l.invariant) lj["invariant"].push_back(b.clock + (b.strict ? " < " : " <= ") + b.bound);
      lj["rates"] = json::object();
      for (const auto& [c, r] : l.rates) lj["rates"][c] = r;
      lj["labels"] = json::array();
      for (const auto& lb : l.labels) lj["labels"].push_back(lb);
      tj["locations"].push_back(lj);
    }
    tj["edges"] = json::array();
    for (const auto& e : t.edges) {
      json ej = {{"source", e.source}, {"target", e.target}, {"weight", e.weight}, {"updates", e.updates}};
      if (!e.guard.empty()) ej["guard"] = e.guard;
      if (e.sync.kind != SyncKind::None)
        ej["sync"] = std::string(e.sync.kind == SyncKind::Send ? "send " : "recv ") + e.sync.channel;
      if (e.spawn) ej["spawn"] = {{"template", e.spawn->tmpl}, {"args", e.spawn->args}};
      tj["edges"].push_back(ej);
    }
    tj["spawnable"] = t.spawnable;
    tj["observer"] = t.observer;
    j["templates"].push_back(tj);
  }
  j["instances"] = json::array();
  for (const auto& i : n.instances) j["instances"].push_back({{"name", i.name}, {"template", i.tmpl}, {"args", i.args}});
  return j;
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError(path + ": " + e.what());
  }
  return network_from_json(j);
}

}  // namespace stasmc
