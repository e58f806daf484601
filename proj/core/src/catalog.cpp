#include "stasmc/catalog.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "stasmc/csv.hpp"
#include "stasmc/observers.hpp"

namespace stasmc::cas {

const char* to_string(Check c) {
  switch (c) {
    case Check::Response: return "response";
    case Check::Invariant: return "invariant";
    case Check::Monitor: return "monitor";
    case Check::Expected: return "expected";
  }
  return "?";
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Satisfied: return "satisfied";
    case Status::Violated: return "violated";
    case Status::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

std::string v(int k) { return "v" + std::to_string(k); }

RequirementSpec response(std::string id, std::string prose, std::string premise, std::string resp, double window) {
  RequirementSpec r;
  r.id = std::move(id);
  r.prose = std::move(prose);
  r.check = Check::Response;
  r.premise = std::move(premise);
  r.response = std::move(resp);
  r.window = window;
  return r;
}

RequirementSpec invariant(std::string id, std::string prose, std::string bad) {
  RequirementSpec r;
  r.id = std::move(id);
  r.prose = std::move(prose);
  r.check = Check::Invariant;
  r.bad = std::move(bad);
  return r;
}

RequirementSpec monitor(std::string id, std::string prose, ConstraintSpec c,
                        std::vector<std::pair<std::string, std::string>> bindings) {
  RequirementSpec r;
  r.id = std::move(id);
  r.prose = std::move(prose);
  r.check = Check::Monitor;
  r.constraint = std::move(c);
  r.bindings = std::move(bindings);
  return r;
}

RequirementSpec expected(std::string id, std::string prose, std::string quantity, double limit) {
  RequirementSpec r;
  r.id = std::move(id);
  r.prose = std::move(prose);
  r.check = Check::Expected;
  r.kind = QueryKind::Expected;
  r.quantity = std::move(quantity);
  r.limit = limit;
  return r;
}

}  // namespace

std::vector<RequirementSpec> requirement_catalog() {
  std::vector<RequirementSpec> c;
  int n = 1;
  auto next = [&] { return "R" + std::to_string(n++); };

  for (int k = 1; k <= 3; ++k)
    c.push_back(response(next(), v(k) + " switches to user control after losing messages",
                         "{" + v(k) + ".msg_missing}", "{" + v(k) + ".manual}", 200));

  c.push_back(response(next(), "cruising leader brakes on a stop sign",
                       "{v1.auto} && {v1.constSpeed} && {sign.stop}", "{v1.stop} || {v1.static}", 500));
  c.push_back(response(next(), "cruising leader turns left on a left-turn sign",
                       "{v1.auto} && {v1.constSpeed} && {sign.left_turn}", "{v1.turnLeft}", 200));
  c.push_back(response(next(), "cruising leader turns right on a right-turn sign",
                       "{v1.auto} && {v1.constSpeed} && {sign.right_turn}", "{v1.turnRight}", 200));

  const std::pair<const char*, const char*> manual[] = {
      {"steer_left_req", "turnLeft"}, {"steer_right_req", "turnRight"}, {"brake_req", "stop"},
      {"gear_up_req", "acc"},         {"gear_down_req", "dec"}};
  const char* manual_prose[] = {"driver left steer turns the leader left", "driver right steer turns the leader right",
                                "driver brake stops the leader", "driver gear up accelerates the leader",
                                "driver gear down decelerates the leader"};
  for (int i = 0; i < 5; ++i)
    c.push_back(response(next(), manual_prose[i],
                         std::string("{v1.manual} && {v1.constSpeed} && {v1.") + manual[i].first + "}",
                         std::string("{v1.") + manual[i].second + "}", 200));

  for (auto [j, k] : {std::pair{1, 2}, std::pair{2, 3}}) {
    std::string pr = v(j) + "_" + v(k);
    c.push_back(invariant(next(), v(k) + " stays behind " + v(j) + " while both head east",
                          "{" + pr + ".both_east} && !{" + pr + ".lead_ahead_x}"));
  }

  c.push_back(response(next(), "all vehicles stand still soon after a stop sign", "{v1.auto} && {sign.stop}",
                       "{all.stopped}", 5000));
  c.back().bound = 10000;

  for (auto [j, k] : {std::pair{1, 2}, std::pair{2, 3}}) {
    std::string pr = v(j) + "_" + v(k), fv = v(k);
    std::string base = "{" + v(j) + ".auto} && {" + fv + ".auto} && {" + fv + ".constSpeed} && ";
    const char* note = "response window widened to two follower control cycles plus message retries";
    struct Row {
      const char* cond;
      const char* resp;
      const char* prose;
    };
    const Row rows[] = {{"lead_faster", "acc", " speeds up when its leader is faster"},
                        {"lead_slower", "dec", " slows down when its leader is slower"},
                        {"too_far", "acc", " closes a gap above the maximum"},
                        {"too_close", "dec", " opens a gap below the safe distance"}};
    for (const auto& row : rows) {
      c.push_back(response(next(), fv + row.prose, base + "{" + pr + "." + row.cond + "}",
                           "{" + fv + "." + row.resp + "}", 2500));
      c.back().scale_note = note;
    }
  }

  for (const char* side : {"left", "right"})
    for (auto [j, k] : {std::pair{1, 2}, std::pair{2, 3}}) {
      std::string pr = v(j) + "_" + v(k);
      std::string turn = std::string("last_turn_") + side;
      c.push_back(invariant(next(), v(k) + " ends in " + v(j) + "'s lane after a " + side + " turn",
                            "{" + v(j) + "." + turn + "} && {" + v(k) + "." + turn + "} && {" + pr +
                                ".same_direction} && !{" + pr + ".same_lane}"));
    }

  for (int k = 1; k <= 3; ++k)
    c.push_back(monitor(next(), v(k) + " dynamics update every 50 ms within 10 ms",
                        ConstraintSpec::periodic_noncumulative(50, 10, "dyn"), {{"dyn", v(k) + ".dyn"}}));
  for (int k = 1; k <= 3; ++k) {
    c.push_back(monitor(next(), v(k) + " user control episodes are at least 2 s apart",
                        ConstraintSpec::sporadic(2000, "manual"), {{"manual", v(k) + ".manual"}}));
    c.back().scale_note = "minimum separation scaled from 20 s to 2000 ms to fit the run bound";
  }
  for (int k = 1; k <= 3; ++k)
    c.push_back(monitor(next(), v(k) + " controller acts 100-300 ms after sensing",
                        ConstraintSpec::execution(100, 300, "in", "out"),
                        {{"in", v(k) + ".ctrl_in"}, {"out", v(k) + ".ctrl_out"}}));
  for (int k = 1; k <= 3; ++k)
    c.push_back(monitor(next(), v(k) + " radio transmits 50-100 ms after sampling",
                        ConstraintSpec::execution(50, 100, "in", "out"),
                        {{"in", v(k) + ".com_in"}, {"out", v(k) + ".com_out"}}));
  for (auto [j, k] : {std::pair{1, 2}, std::pair{2, 3}})
    c.push_back(monitor(next(), v(j) + " sensing reaches " + v(k) + " actuation within 300-700 ms",
                        ConstraintSpec::end_to_end(300, 700, "source", "target"),
                        {{"source", v(j) + ".ctrl_in"}, {"target", v(k) + ".ctrl_out_lead"}}));
  for (int k = 1; k <= 3; ++k)
    c.push_back(monitor(next(), v(k) + " sensing reaches the radio within 200-500 ms",
                        ConstraintSpec::end_to_end(200, 500, "source", "target"),
                        {{"source", v(k) + ".ctrl_in"}, {"target", v(k) + ".com_out"}}));
  for (int k = 1; k <= 3; ++k)
    c.push_back(monitor(next(), v(k) + " sensor reads stay within 200 ms of the cycle start",
                        ConstraintSpec::synchronization(200, {"in", "read"}),
                        {{"in", v(k) + ".ctrl_in"}, {"read", v(k) + ".ctrl_read"}}));

  using K = TimingTerm::Kind;
  TimingExpr lhs{{K::Wcet, 0, "c1_in", "c1_out"},
                 {K::Wcet, 0, "c2_in", "c2_out"},
                 {K::Wcet, 0, "m1_in", "m1_out"},
                 {K::Wcet, 0, "m2_in", "m2_out"}};
  TimingExpr rhs{{K::EndToEnd, 0, "c1_in", "c2_lead"}};
  c.push_back(monitor(next(), "v1 to v2 latency is covered by the summed worst-case stage times",
                      ConstraintSpec::comparison(lhs, Relation::Ge, rhs),
                      {{"c1_in", "v1.ctrl_in"},
                       {"c1_out", "v1.ctrl_out"},
                       {"c2_in", "v2.ctrl_in"},
                       {"c2_out", "v2.ctrl_out"},
                       {"m1_in", "v1.com_in"},
                       {"m1_out", "v1.com_out"},
                       {"m2_in", "v2.com_in"},
                       {"m2_out", "v2.com_out"},
                       {"c2_lead", "v2.ctrl_out_lead"}}));
  c.back().dual = true;

  c.push_back(expected(next(), "expected peak v1 braking energy below 30 kJ", "{v1.braking_energy}", 30000));
  c.push_back(expected(next(), "expected peak v1 controller energy below 30 J", "{v1.ctrl_energy}", 30));
  c.push_back(expected(next(), "expected peak v1 radio energy below 5 J", "{v1.com_energy}", 5));
  return c;
}

const RequirementSpec& find_requirement(const std::vector<RequirementSpec>& catalog, const std::string& id) {
  auto it = std::find_if(catalog.begin(), catalog.end(), [&](const RequirementSpec& r) { return r.id == id; });
  if (it == catalog.end()) throw std::out_of_range("unknown requirement " + id);
  return *it;
}

std::string bind_taps(const std::string& text, const TapRegistry& taps) {
  std::string out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t open = text.find('{', pos);
    if (open == std::string::npos) {
      out += text.substr(pos);
      break;
    }
    size_t close = text.find('}', open);
    if (close == std::string::npos) throw ModelError("unterminated tap reference in " + text);
    out += text.substr(pos, open - pos);
    std::string name = text.substr(open + 1, close - open - 1);
    if (taps.predicates.count(name)) out += "(" + taps.predicate(name) + ")";
    else out += "(" + taps.quantity(name) + ")";
    pos = close + 1;
  }
  return out;
}

namespace {

// Counts a run as good when the wrapped property fails.
class Negated : public Property {
 public:
  explicit Negated(std::unique_ptr<Property> p) : p_(std::move(p)) {}
  bool holds(const Model& m, std::uint64_t seed, std::uint64_t stream) const override {
    return !p_->holds(m, seed, stream);
  }
  std::string describe() const override { return "not " + p_->describe(); }

 private:
  std::unique_ptr<Property> p_;
};

bool online(ConstraintKind k) { return k != ConstraintKind::EndToEnd && k != ConstraintKind::Comparison; }

std::string echo_monitor(const RequirementSpec& r) {
  std::string s = to_string(r.constraint->kind);
  s += "(";
  for (size_t i = 0; i < r.bindings.size(); ++i)
    s += (i ? "," : "") + r.bindings[i].first + "=" + r.bindings[i].second;
  return s + ")";
}

}  // namespace

BoundRequirement bind_requirement(const RequirementSpec& r, const Platoon& p, double bound) {
  BoundRequirement b;
  std::string pr = "Pr[" + csv::num(bound) + "]";
  switch (r.check) {
    case Check::Response: {
      auto a = attach_response(p.network, r.id, bind_taps(r.premise, p.taps), bind_taps(r.response, p.taps),
                               r.window);
      b.network = std::move(a.network);
      b.property = std::make_unique<PathQuery>(PathProperty{Shape::Always, "!" + a.fail_predicate, bound});
      b.query = pr + "([] !" + r.id + ".fail) >= " + csv::num(r.p0) + " with " + r.id + ": " + r.premise +
                " -> <>[" + csv::num(r.window) + "] " + r.response;
      break;
    }
    case Check::Invariant: {
      auto a = attach_invariant(p.network, r.id, bind_taps(r.bad, p.taps));
      b.network = std::move(a.network);
      b.property = std::make_unique<PathQuery>(PathProperty{Shape::Always, "!" + a.fail_predicate, bound});
      b.query = pr + "([] !(" + r.bad + ")) >= " + csv::num(r.p0);
      break;
    }
    case Check::Monitor: {
      std::vector<EventBinding> ev;
      for (const auto& [tag, name] : r.bindings) ev.push_back(p.taps.event(name, tag));
      auto a = attach(*r.constraint, p.network, ev, r.id);
      b.network = a.network;
      std::unique_ptr<Property> prop;
      if (online(r.constraint->kind))
        prop = std::make_unique<PathQuery>(PathProperty{Shape::Always, "!" + a.fail_predicate, bound});
      else
        prop = std::make_unique<MonitorProperty>(*r.constraint, std::move(a), bound);
      if (r.dual) {
        b.property = std::make_unique<Negated>(std::move(prop));
        b.query = pr + "(<> " + r.id + ".fail) <= " + csv::num(std::round((1 - r.p0) * 1e9) / 1e9) + " with " + echo_monitor(r);
      } else {
        b.property = std::move(prop);
        b.query = pr + "([] !" + r.id + ".fail) >= " + csv::num(r.p0) + " with " + echo_monitor(r);
      }
      break;
    }
    case Check::Expected:
      b.network = p.network;
      b.expr = bind_taps(r.quantity, p.taps);
      b.query = std::string("E[") + csv::num(bound) + ";" + std::to_string(r.runs) + "](" +
                (r.extremum == Extremum::Max ? "max" : "min") + ": " + r.quantity + ") < " + csv::num(r.limit);
      break;
  }
  return b;
}

RequirementResult evaluate_requirement(const RequirementSpec& r, const Platoon& p, const EvalOptions& opt) {
  double bound = opt.bound.value_or(r.bound);
  BoundRequirement b = bind_requirement(r, p, bound);
  Model m(b.network);
  RequirementResult out;
  out.id = r.id;
  out.query = b.query;
  if (r.check == Check::Expected) {
    out.result = expected_value(m, bound, r.runs, r.extremum, b.expr, opt.seed, opt.jobs);
    out.status = out.result.mean < r.limit ? Status::Satisfied : Status::Violated;
    return out;
  }
  HypothesisParams hp = opt.hypothesis;
  hp.p0 = r.dual ? 1 - r.p0 : r.p0;
  hp.cmp = r.dual ? Comparison::AtMost : Comparison::AtLeast;
  out.result = hypothesis_test(m, *b.property, hp, opt.seed, opt.jobs);
  switch (out.result.verdict) {
    case Verdict::Accepted: out.status = Status::Satisfied; break;
    case Verdict::Rejected: out.status = Status::Violated; break;
    case Verdict::Undecided: out.status = Status::Inconclusive; break;
  }
  // A run is bad when the property fails, or holds under the dual reading.
  long bad = r.dual ? out.result.successes : out.result.runs_used - out.result.successes;
  for (long i = 0; bad > 0 && i < out.result.runs_used; ++i)
    if (b.property->holds(m, opt.seed, static_cast<std::uint64_t>(i)) == r.dual) {
      out.counterexample = i;
      break;
    }
  return out;
}

std::string config_hash(const PlatoonConfig& c) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool SuiteReport::any_violated() const {
  return std::any_of(results.begin(), results.end(),
                     [](const RequirementResult& r) { return r.status == Status::Violated; });
}

SuiteReport run_suite(const PlatoonConfig& config, const std::vector<std::string>& only, const EvalOptions& opt) {
  auto catalog = requirement_catalog();
  std::vector<const RequirementSpec*> selected;
  if (only.empty()) {
    for (const auto& r : catalog) selected.push_back(&r);
  } else {
    for (const auto& id : only) selected.push_back(&find_requirement(catalog, id));
    std::sort(selected.begin(), selected.end());  // pointers into the catalog: catalog order
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  }
  Platoon p = build_platoon(config);
  SuiteReport rep;
  rep.seed = opt.seed;
  rep.config_hash = config_hash(config);
  rep.engine_version = STASMC_VERSION;
  for (const auto* r : selected) {
    auto t0 = std::chrono::steady_clock::now();
    rep.results.push_back(evaluate_requirement(*r, p, opt));
    rep.wall_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return rep;
}

void write_suite_csv(std::ostream& os, const SuiteReport& r) {
  os << "id,check,status,lo,hi,mean,half_width,runs_used,counterexample,seed,config_hash,engine_version,query\n";
  auto catalog = requirement_catalog();
  for (const auto& x : r.results) {
    const auto& spec = find_requirement(catalog, x.id);
    std::string q = x.query;
    std::replace(q.begin(), q.end(), ',', ';');
    bool est = x.result.kind == QueryKind::Estimate;
    bool exp = x.result.kind == QueryKind::Expected;
    os << x.id << ',' << to_string(spec.check) << ',' << to_string(x.status) << ','
       << (est ? csv::num(x.result.lo) : "-") << ',' << (est ? csv::num(x.result.hi) : "-") << ','
       << (exp ? csv::num(x.result.mean) : "-") << ',' << (exp ? csv::num(x.result.half_width) : "-") << ','
       << x.result.runs_used << ',' << x.counterexample << ',' << r.seed << ',' << r.config_hash << ','
       << r.engine_version << ',' << q << '\n';
  }
}

}  // namespace stasmc::cas
