// Whole-stream reference semantics for the timing constraints. Written as
// direct scans over the full stream, deliberately independent of the
// incremental Monitor.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "stasmc/monitors.hpp"

namespace stasmc {

namespace {

constexpr double kTol = kMonitorTol;

bool within(double x, double lo, double hi) { return x >= lo - kTol && x <= hi + kTol; }

// For every event position of tag `from`, the position of the `to` event it
// pairs with (or -1). An id-carrying event pairs with the first later event
// of the other tag with the same id; id-less ones pair first-come first-served.
std::vector<long> pairing(const EventStream& s, const std::string& from, const std::string& to) {
  const long n = static_cast<long>(s.size());
  std::vector<long> partner(n, -1);
  std::vector<char> used(n, 0);
  for (long j = 0; j < n; ++j) {
    if (s[j].tag != to) continue;
    for (long i = 0; i < j; ++i) {
      if (s[i].tag != from || used[i] || s[i].id != s[j].id) continue;
      // id-carrying sources may have been dropped by an earlier, higher target id
      used[i] = 1;
      partner[i] = j;
      break;
    }
  }
  return partner;
}

std::optional<double> worst_delay(const EventStream& s, const std::string& from, const std::string& to,
                                  bool end_to_end) {
  auto partner = pairing(s, from, to);
  std::optional<double> worst;
  for (size_t i = 0; i < s.size(); ++i) {
    if (partner[i] < 0) continue;
    if (end_to_end && s[i].id > 0) {
      // discarded if a higher-id target arrived between source and match
      bool dropped = false;
      for (long k = static_cast<long>(i) + 1; k < partner[i]; ++k)
        if (s[k].tag == to && s[k].id > s[i].id) dropped = true;
      if (dropped) continue;
    }
    double d = s[partner[i]].time - s[i].time;
    if (!worst || d > *worst) worst = d;
  }
  return worst;
}

std::optional<double> timing_value(const TimingExpr& e, const EventStream& s) {
  double total = 0;
  for (const auto& t : e) {
    if (t.kind == TimingTerm::Kind::Const) {
      total += t.value;
    } else {
      auto w = worst_delay(s, t.from, t.to, t.kind == TimingTerm::Kind::EndToEnd);
      if (!w) return std::nullopt;
      total += *w;
    }
  }
  return total;
}

bool relation_holds(double a, Relation r, double b) {
  switch (r) {
    case Relation::Lt: return a < b - kTol;
    case Relation::Le: return !(a > b + kTol);
    case Relation::Eq: return !(a > b + kTol) && !(a < b - kTol);
    case Relation::Ge: return !(a < b - kTol);
    case Relation::Gt: return a > b + kTol;
  }
  return false;
}

}  // namespace

std::vector<MonitorVerdict> oracle_verdicts(const ConstraintSpec& spec, const EventStream& s, double end_time) {
  spec.check();
  for (size_t i = 1; i < s.size(); ++i)
    if (s[i].time < s[i - 1].time) throw std::invalid_argument("event stream has decreasing timestamps");
  const double end = std::isnan(end_time) ? (s.empty() ? 0.0 : s.back().time) : end_time;
  std::vector<MonitorVerdict> out;

  switch (spec.kind) {
    case ConstraintKind::Execution:
    case ConstraintKind::EndToEnd: {
      const bool e2e = spec.kind == ConstraintKind::EndToEnd;
      auto partner = pairing(s, spec.in, spec.out);
      long idx = 0;
      for (size_t i = 0; i < s.size(); ++i) {
        if (s[i].tag != spec.in) continue;
        Outcome o;
        bool dropped = false;
        if (e2e && s[i].id > 0) {
          long stop = partner[i] >= 0 ? partner[i] : static_cast<long>(s.size());
          for (long k = static_cast<long>(i) + 1; k < stop; ++k)
            if (s[k].tag == spec.out && s[k].id > s[i].id) dropped = true;
        }
        if (dropped) o = Outcome::Vacuous;
        else if (partner[i] < 0) o = e2e ? Outcome::Vacuous : Outcome::Fail;
        else o = within(s[partner[i]].time - s[i].time, spec.lower, spec.upper) ? Outcome::Success : Outcome::Fail;
        out.push_back({idx++, s[i].time, o});
      }
      break;
    }
    case ConstraintKind::Synchronization: {
      std::vector<size_t> mem;
      for (size_t i = 0; i < s.size(); ++i)
        if (std::count(spec.members.begin(), spec.members.end(), s[i].tag)) mem.push_back(i);
      size_t i = 0;
      long g = 0;
      while (i < mem.size()) {
        const double t0 = s[mem[i]].time;
        const double deadline = t0 + spec.tolerance;
        std::vector<std::string> got{s[mem[i]].tag};
        auto complete = [&] {
          for (const auto& m : spec.members)
            if (std::find(got.begin(), got.end(), m) == got.end()) return false;
          return true;
        };
        size_t j = i + 1;
        Outcome o;
        if (complete()) {
          o = Outcome::Success;
        } else {
          o = Outcome::Vacuous;
          bool decided = false;
          for (; j < mem.size(); ++j) {
            if (s[mem[j]].time > deadline + kTol) {
              o = Outcome::Fail;
              decided = true;
              break;  // this event starts the next group
            }
            got.push_back(s[mem[j]].tag);
            if (complete()) {
              o = Outcome::Success;
              decided = true;
              ++j;
              break;
            }
          }
          if (!decided) o = end > deadline + kTol ? Outcome::Fail : Outcome::Vacuous;
        }
        out.push_back({g++, t0, o});
        i = j;
      }
      break;
    }
    case ConstraintKind::PeriodicCumulative:
    case ConstraintKind::Sporadic: {
      std::vector<double> occ;
      for (const auto& e : s)
        if (e.tag == spec.event) occ.push_back(e.time);
      if (occ.size() == 1) out.push_back({0, occ[0], Outcome::Vacuous});
      for (size_t k = 1; k < occ.size(); ++k) {
        double gap = occ[k] - occ[k - 1];
        bool ok = spec.kind == ConstraintKind::Sporadic ? gap >= spec.min - kTol
                                                         : within(gap, spec.period - spec.jitter, spec.period + spec.jitter);
        out.push_back({static_cast<long>(k - 1), occ[k], ok ? Outcome::Success : Outcome::Fail});
      }
      break;
    }
    case ConstraintKind::PeriodicNoncumulative: {
      long i = 0;
      for (const auto& e : s) {
        if (e.tag != spec.event) continue;
        ++i;
        double c = spec.period * static_cast<double>(i);
        out.push_back({i - 1, e.time, within(e.time, c - spec.jitter, c + spec.jitter) ? Outcome::Success : Outcome::Fail});
      }
      break;
    }
    case ConstraintKind::Comparison: {
      auto l = timing_value(spec.lhs, s);
      auto r = timing_value(spec.rhs, s);
      Outcome o = (!l || !r) ? Outcome::Vacuous : relation_holds(*l, spec.rel, *r) ? Outcome::Success : Outcome::Fail;
      out.push_back({0, end, o});
      break;
    }
  }
  return out;
}

}  // namespace stasmc
