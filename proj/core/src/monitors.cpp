#include "stasmc/monitors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

#include "stasmc/csv.hpp"

namespace stasmc {

const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Execution: return "execution";
    case ConstraintKind::EndToEnd: return "end_to_end";
    case ConstraintKind::Synchronization: return "synchronization";
    case ConstraintKind::PeriodicCumulative: return "periodic_cumulative";
    case ConstraintKind::PeriodicNoncumulative: return "periodic_noncumulative";
    case ConstraintKind::Sporadic: return "sporadic";
    case ConstraintKind::Comparison: return "comparison";
  }
  return "?";
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Fail: return "fail";
    case Outcome::Vacuous: return "vacuous";
  }
  return "?";
}

Relation parse_relation(const std::string& s) {
  if (s == "<") return Relation::Lt;
  if (s == "<=") return Relation::Le;
  if (s == "=" || s == "==") return Relation::Eq;
  if (s == ">=") return Relation::Ge;
  if (s == ">") return Relation::Gt;
  throw std::invalid_argument("unknown relation '" + s + "'");
}

const char* to_string(Relation r) {
  switch (r) {
    case Relation::Lt: return "<";
    case Relation::Le: return "<=";
    case Relation::Eq: return "=";
    case Relation::Ge: return ">=";
    case Relation::Gt: return ">";
  }
  return "?";
}

bool compare(double a, Relation r, double b) {
  switch (r) {
    case Relation::Lt: return a < b - kMonitorTol;
    case Relation::Le: return a <= b + kMonitorTol;
    case Relation::Eq: return std::abs(a - b) <= kMonitorTol;
    case Relation::Ge: return a >= b - kMonitorTol;
    case Relation::Gt: return a > b + kMonitorTol;
  }
  return false;
}

// ---- spec constructors -------------------------------------------------------------

ConstraintSpec ConstraintSpec::execution(double lower, double upper, std::string in, std::string out) {
  ConstraintSpec s;
  s.kind = ConstraintKind::Execution;
  s.lower = lower;
  s.upper = upper;
  s.in = std::move(in);
  s.out = std::move(out);
  return s;
}

ConstraintSpec ConstraintSpec::end_to_end(double lower, double upper, std::string source, std::string target) {
  ConstraintSpec s = execution(lower, upper, std::move(source), std::move(target));
  s.kind = ConstraintKind::EndToEnd;
  return s;
}

ConstraintSpec ConstraintSpec::synchronization(double tolerance, std::vector<std::string> members) {
  ConstraintSpec s;
  s.kind = ConstraintKind::Synchronization;
  s.tolerance = tolerance;
  s.members = std::move(members);
  return s;
}

ConstraintSpec ConstraintSpec::periodic_cumulative(double period, double jitter, std::string event) {
  ConstraintSpec s;
  s.kind = ConstraintKind::PeriodicCumulative;
  s.period = period;
  s.jitter = jitter;
  s.event = std::move(event);
  return s;
}

ConstraintSpec ConstraintSpec::periodic_noncumulative(double period, double jitter, std::string event) {
  ConstraintSpec s = periodic_cumulative(period, jitter, std::move(event));
  s.kind = ConstraintKind::PeriodicNoncumulative;
  return s;
}

ConstraintSpec ConstraintSpec::sporadic(double min, std::string event) {
  ConstraintSpec s;
  s.kind = ConstraintKind::Sporadic;
  s.min = min;
  s.event = std::move(event);
  return s;
}

ConstraintSpec ConstraintSpec::comparison(TimingExpr lhs, Relation rel, TimingExpr rhs) {
  ConstraintSpec s;
  s.kind = ConstraintKind::Comparison;
  s.lhs = std::move(lhs);
  s.rel = rel;
  s.rhs = std::move(rhs);
  return s;
}

void ConstraintSpec::check() const {
  auto bad = [](const std::string& why) { throw std::invalid_argument(why); };
  switch (kind) {
    case ConstraintKind::Execution:
    case ConstraintKind::EndToEnd:
      if (lower < 0 || lower > upper) bad("need 0 <= lower <= upper");
      if (in == out) bad("in and out tags must differ");
      break;
    case ConstraintKind::Synchronization:
      if (!(tolerance > 0)) bad("tolerance must be positive");
      if (members.empty()) bad("synchronization needs members");
      if (std::set<std::string>(members.begin(), members.end()).size() != members.size())
        bad("duplicate synchronization member");
      break;
    case ConstraintKind::PeriodicCumulative:
    case ConstraintKind::PeriodicNoncumulative:
      if (!(period > 0) || jitter < 0 || !(jitter < period)) bad("need 0 <= jitter < period");
      break;
    case ConstraintKind::Sporadic:
      if (!(min > 0)) bad("min must be positive");
      break;
    case ConstraintKind::Comparison:
      if (lhs.empty() || rhs.empty()) bad("comparison sides must be non-empty");
      break;
  }
}

std::vector<std::string> ConstraintSpec::tags() const {
  switch (kind) {
    case ConstraintKind::Execution:
    case ConstraintKind::EndToEnd: return {in, out};
    case ConstraintKind::Synchronization: return members;
    case ConstraintKind::PeriodicCumulative:
    case ConstraintKind::PeriodicNoncumulative:
    case ConstraintKind::Sporadic: return {event};
    case ConstraintKind::Comparison: {
      std::vector<std::string> t;
      for (const auto* side : {&lhs, &rhs})
        for (const auto& term : *side)
          if (term.kind != TimingTerm::Kind::Const)
            for (const auto* tag : {&term.from, &term.to})
              if (std::find(t.begin(), t.end(), *tag) == t.end()) t.push_back(*tag);
      return t;
    }
  }
  return {};
}

// ---- pair matching used by timing expressions -----------------------------------------

namespace {

// Delays of matched (from, to) pairs. Ids match exactly; id-less events
// match first-in-first-out. With discard_lower, a target with id k drops
// pending sources with smaller ids (end-to-end rule).
std::vector<double> matched_delays(const EventStream& s, const std::string& from, const std::string& to,
                                   bool discard_lower) {
  struct P {
    double t;
    long id;
  };
  std::vector<P> pending;
  std::vector<double> out;
  for (const auto& e : s) {
    if (e.tag == from) {
      pending.push_back({e.time, e.id});
    } else if (e.tag == to) {
      auto it = std::find_if(pending.begin(), pending.end(), [&](const P& p) { return p.id == e.id; });
      if (it != pending.end()) {
        out.push_back(e.time - it->t);
        pending.erase(it);
      }
      if (discard_lower && e.id > 0)
        pending.erase(std::remove_if(pending.begin(), pending.end(), [&](const P& p) { return p.id > 0 && p.id < e.id; }),
                      pending.end());
    }
  }
  return out;
}

}  // namespace

std::optional<double> evaluate_timing(const TimingExpr& e, const EventStream& stream) {
  double sum = 0;
  for (const auto& term : e) {
    if (term.kind == TimingTerm::Kind::Const) {
      sum += term.value;
      continue;
    }
    auto d = matched_delays(stream, term.from, term.to, term.kind == TimingTerm::Kind::EndToEnd);
    if (d.empty()) return std::nullopt;
    sum += *std::max_element(d.begin(), d.end());
  }
  return sum;
}

// ---- incremental monitor ---------------------------------------------------------------

Monitor::Monitor(ConstraintSpec spec) : spec_(std::move(spec)) {
  spec_.check();
  seen_.assign(spec_.members.size(), 0);
}

void Monitor::emit(long index, double time, Outcome o) { verdicts_.push_back({index, time, o}); }

bool Monitor::any_fail() const {
  return std::any_of(verdicts_.begin(), verdicts_.end(), [](const MonitorVerdict& v) { return v.outcome == Outcome::Fail; });
}

void Monitor::on_event(const TimedEvent& e) {
  if (finished_) throw std::logic_error("monitor already finished");
  if (e.time < last_time_) throw std::invalid_argument("event stream has decreasing timestamps");
  last_time_ = e.time;
  const double tol = kMonitorTol;
  switch (spec_.kind) {
    case ConstraintKind::Execution:
    case ConstraintKind::EndToEnd: {
      if (e.tag == spec_.in) {
        pending_.push_back({count_++, e.time, e.id});
      } else if (e.tag == spec_.out) {
        auto it = std::find_if(pending_.begin(), pending_.end(), [&](const Pending& p) { return p.id == e.id; });
        if (it != pending_.end()) {
          double d = e.time - it->time;
          bool ok = d >= spec_.lower - tol && d <= spec_.upper + tol;
          emit(it->index, it->time, ok ? Outcome::Success : Outcome::Fail);
          pending_.erase(it);
        }
        if (spec_.kind == ConstraintKind::EndToEnd && e.id > 0) {
          for (auto p = pending_.begin(); p != pending_.end();) {
            if (p->id > 0 && p->id < e.id) {
              emit(p->index, p->time, Outcome::Vacuous);
              p = pending_.erase(p);
            } else {
              ++p;
            }
          }
        }
      }
      break;
    }
    case ConstraintKind::Synchronization: {
      auto m = std::find(spec_.members.begin(), spec_.members.end(), e.tag);
      if (m == spec_.members.end()) break;
      if (open_ && e.time > group_start_ + spec_.tolerance + tol) {
        emit(count_ - 1, group_start_, Outcome::Fail);
        open_ = false;
      }
      if (!open_) {
        open_ = true;
        group_start_ = e.time;
        std::fill(seen_.begin(), seen_.end(), 0);
        ++count_;
      }
      seen_[m - spec_.members.begin()] = 1;
      if (std::all_of(seen_.begin(), seen_.end(), [](char c) { return c != 0; })) {
        emit(count_ - 1, group_start_, Outcome::Success);
        open_ = false;
      }
      break;
    }
    case ConstraintKind::PeriodicCumulative:
    case ConstraintKind::Sporadic: {
      if (e.tag != spec_.event) break;
      if (have_prev_) {
        double gap = e.time - prev_;
        bool ok = spec_.kind == ConstraintKind::Sporadic
                      ? gap >= spec_.min - tol
                      : gap >= spec_.period - spec_.jitter - tol && gap <= spec_.period + spec_.jitter + tol;
        emit(count_++, e.time, ok ? Outcome::Success : Outcome::Fail);
      }
      if (!have_prev_) first_ = e.time;
      have_prev_ = true;
      prev_ = e.time;
      break;
    }
    case ConstraintKind::PeriodicNoncumulative: {
      if (e.tag != spec_.event) break;
      long i = ++count_;
      double c = static_cast<double>(i) * spec_.period;
      bool ok = e.time >= c - spec_.jitter - tol && e.time <= c + spec_.jitter + tol;
      emit(i - 1, e.time, ok ? Outcome::Success : Outcome::Fail);
      break;
    }
    case ConstraintKind::Comparison: log_.push_back(e); break;
  }
}

void Monitor::finish(double end_time) {
  if (finished_) return;
  finished_ = true;
  double end = std::isnan(end_time) ? (std::isfinite(last_time_) ? last_time_ : 0.0) : end_time;
  switch (spec_.kind) {
    case ConstraintKind::Execution:
      for (const auto& p : pending_) emit(p.index, p.time, Outcome::Fail);
      break;
    case ConstraintKind::EndToEnd:
      for (const auto& p : pending_) emit(p.index, p.time, Outcome::Vacuous);
      break;
    case ConstraintKind::Synchronization:
      if (open_)
        emit(count_ - 1, group_start_,
             end > group_start_ + spec_.tolerance + kMonitorTol ? Outcome::Fail : Outcome::Vacuous);
      break;
    case ConstraintKind::PeriodicCumulative:
    case ConstraintKind::Sporadic:
      if (have_prev_ && count_ == 0) emit(0, first_, Outcome::Vacuous);
      break;
    case ConstraintKind::PeriodicNoncumulative: break;
    case ConstraintKind::Comparison: {
      auto l = evaluate_timing(spec_.lhs, log_);
      auto r = evaluate_timing(spec_.rhs, log_);
      Outcome o = (!l || !r) ? Outcome::Vacuous : compare(*l, spec_.rel, *r) ? Outcome::Success : Outcome::Fail;
      emit(0, end, o);
      break;
    }
  }
  pending_.clear();
  std::stable_sort(verdicts_.begin(), verdicts_.end(),
                   [](const MonitorVerdict& a, const MonitorVerdict& b) { return a.index < b.index; });
}

std::vector<MonitorVerdict> run_monitor(const ConstraintSpec& spec, const EventStream& stream, double end_time) {
  Monitor m(spec);
  for (const auto& e : stream) m.on_event(e);
  m.finish(end_time);
  return m.verdicts();
}

// ---- weakly-hard -----------------------------------------------------------------------

std::vector<Outcome> non_vacuous(const std::vector<MonitorVerdict>& v) {
  std::vector<Outcome> out;
  for (const auto& x : v)
    if (x.outcome != Outcome::Vacuous) out.push_back(x.outcome);
  return out;
}

WhResult apply_weakly_hard(const std::vector<Outcome>& verdicts, const WeaklyHard& wh) {
  if (wh.k < 1 || wh.m < 0 || wh.m > wh.k) throw std::invalid_argument("weakly-hard needs 0 <= m <= k, k >= 1");
  if (wh.m == 0 || static_cast<int>(verdicts.size()) < wh.k) return WhResult::Satisfied;
  int ok = 0;
  for (int i = 0; i < static_cast<int>(verdicts.size()); ++i) {
    ok += verdicts[i] == Outcome::Success;
    if (i >= wh.k) ok -= verdicts[i - wh.k] == Outcome::Success;
    if (i >= wh.k - 1 && ok < wh.m) return WhResult::Violated;
  }
  return WhResult::Satisfied;
}

// ---- offline CSV -------------------------------------------------------------------------

EventStream read_event_stream_csv(std::istream& is) {
  auto t = csv::read(is);
  int ct = t.column("time_ms"), cg = t.column("tag"), ci = t.column("id");
  if (ct < 0 || cg < 0) throw std::invalid_argument("event CSV needs columns time_ms,tag[,id]");
  EventStream s;
  for (const auto& row : t.rows) {
    TimedEvent e;
    e.time = std::stod(row.at(ct));
    e.tag = row.at(cg);
    if (ci >= 0 && ci < static_cast<int>(row.size()) && !row[ci].empty() && row[ci] != "-")
      e.id = std::stol(row[ci]);
    s.push_back(std::move(e));
  }
  return s;
}

void write_verdict_csv(std::ostream& os, const std::vector<MonitorVerdict>& v) {
  os << "index,time,verdict\n";
  for (const auto& x : v) os << x.index << ',' << csv::num(x.time) << ',' << to_string(x.outcome) << '\n';
}

}  // namespace stasmc
