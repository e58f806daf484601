#include "stasmc/smc.hpp"

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "stasmc/csv.hpp"

namespace stasmc {

namespace {
constexpr double kTol = 1e-9;
}

const char* to_string(Shape s) { return s == Shape::Always ? "always" : "eventually"; }

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Accepted: return "accepted";
    case Verdict::Rejected: return "rejected";
    case Verdict::Undecided: return "undecided";
  }
  return "?";
}

const char* to_string(QueryKind k) {
  switch (k) {
    case QueryKind::Estimate: return "estimate";
    case QueryKind::Hypothesis: return "test";
    case QueryKind::Expected: return "expected";
    case QueryKind::Simulate: return "simulate";
  }
  return "?";
}

// ---- path checking ---------------------------------------------------------------

PathChecker::PathChecker(const Model& m, const PathProperty& p) : m_(m), p_(p) {
  pred_ = m.compile_global(p.predicate);
  if (pred_.kind() != ValueKind::Bool) throw ExprError("path predicate must be boolean: " + p.predicate);
  for (auto& c : pred_.clock_comparisons())
    if (auto d = c.comparison_difference()) cmps_.push_back(std::move(d->first));
}

void PathChecker::reset() {
  decided_ = false;
  value_ = false;
  witness_ = -1;
}

bool PathChecker::result() const { return decided_ ? value_ : p_.shape == Shape::Always; }

bool PathChecker::finish_at_bound() {
  decided_ = true;
  value_ = p_.shape == Shape::Always;
  witness_ = p_.bound;
  return false;
}

bool PathChecker::observe(const NetworkState& s, double dt) {
  double t = s.time + dt;
  if (t > p_.bound + kTol) return finish_at_bound();
  StateEnv env(m_, s);
  bool v = pred_.holds(env, dt);
  if (p_.shape == Shape::Always ? !v : v) {
    decided_ = true;
    value_ = v;
    witness_ = t;
    return false;
  }
  return true;
}

bool PathChecker::point(const Model&, const NetworkState& s, double dt) {
  if (decided_) return false;
  return observe(s, dt);
}

bool PathChecker::segment(const Model&, const NetworkState& s, double a, double b) {
  if (decided_) return false;
  double limit = p_.bound - s.time;
  if (a > limit + kTol) return finish_at_bound();
  double end = std::min(b, limit);
  std::vector<double> cand{a, end};
  if (end > a) {
    StateEnv env(m_, s);
    for (const auto& c : cmps_) {
      auto aff = c.affine(env);
      if (!aff || aff->second == 0) continue;
      double r = -aff->first / aff->second;
      if (r > a && r < end) cand.push_back(r);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    size_t n = cand.size();
    for (size_t i = 0; i + 1 < n; ++i) cand.push_back(0.5 * (cand[i] + cand[i + 1]));
  }
  for (double dt : cand)
    if (!observe(s, dt)) return false;
  if (b > limit + kTol) return finish_at_bound();
  return true;
}

bool check_path(const Model& m, const Run& run, const PathProperty& p) {
  if (run.bound + kTol < p.bound) throw std::invalid_argument("run is shorter than the property bound");
  PathChecker chk(m, p);
  SimOptions o;
  o.bound = run.bound;
  o.seed = run.seed;
  o.stream = run.stream;
  o.record_events = false;
  o.listener = &chk;
  simulate(m, o);
  return chk.result();
}

bool PathQuery::holds(const Model& m, std::uint64_t seed, std::uint64_t stream) const {
  PathChecker chk(m, p_);
  SimOptions o;
  o.bound = p_.bound;
  o.seed = seed;
  o.stream = stream;
  o.record_events = false;
  o.listener = &chk;
  simulate(m, o);
  return chk.result();
}

std::string PathQuery::describe() const {
  return std::string("Pr[<=") + csv::num(p_.bound) + "](" + (p_.shape == Shape::Always ? "[] " : "<> ") +
         p_.predicate + ")";
}

// ---- execution -----------------------------------------------------------------

int default_jobs() {
  if (const char* e = std::getenv("STASMC_JOBS")) {
    int v = std::atoi(e);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for_index(long begin, long end, int jobs, const std::function<void(long)>& f) {
  if (jobs <= 0) jobs = default_jobs();
  if (jobs == 1 || end - begin <= 1) {
    for (long i = begin; i < end; ++i) f(i);
    return;
  }
  tbb::global_control gc(tbb::global_control::max_allowed_parallelism, static_cast<size_t>(jobs));
  tbb::parallel_for(tbb::blocked_range<long>(begin, end), [&](const tbb::blocked_range<long>& r) {
    for (long i = r.begin(); i != r.end(); ++i) f(i);
  });
}

// ---- queries --------------------------------------------------------------------

long chernoff_runs(double epsilon, double alpha) {
  if (!(epsilon > 0 && epsilon < 1 && alpha > 0 && alpha < 1))
    throw std::invalid_argument("epsilon and alpha must lie in (0, 1)");
  return static_cast<long>(std::ceil(std::log(2.0 / alpha) / (2.0 * epsilon * epsilon)));
}

QueryResult estimate_probability(const Model& m, const Property& p, const EstimateParams& params,
                                 std::uint64_t seed, int jobs) {
  long n = chernoff_runs(params.epsilon, params.alpha);
  std::vector<char> ok(n, 0);
  parallel_for_index(0, n, jobs, [&](long i) { ok[i] = p.holds(m, seed, static_cast<std::uint64_t>(i)); });
  QueryResult r;
  r.kind = QueryKind::Estimate;
  r.seed = seed;
  r.runs_used = n;
  for (char c : ok) r.successes += c;
  r.p_hat = static_cast<double>(r.successes) / n;
  r.lo = std::max(0.0, r.p_hat - params.epsilon);
  r.hi = std::min(1.0, r.p_hat + params.epsilon);
  return r;
}

QueryResult sprt(const std::function<bool(long)>& outcome, const HypothesisParams& params) {
  bool flip = params.cmp == Comparison::AtMost;
  double p0 = flip ? 1.0 - params.p0 : params.p0;
  double p_hi = p0 + params.delta, p_lo = p0 - params.delta;
  if (!(p_lo > 0 && p_hi < 1)) throw std::invalid_argument("indifference region must lie inside (0, 1)");
  if (!(params.alpha > 0 && params.alpha < 1 && params.beta > 0 && params.beta < 1))
    throw std::invalid_argument("alpha and beta must lie in (0, 1)");
  const double log_a = std::log((1 - params.beta) / params.alpha);
  const double log_b = std::log(params.beta / (1 - params.alpha));
  const double step_true = std::log(p_lo / p_hi);
  const double step_false = std::log((1 - p_lo) / (1 - p_hi));
  QueryResult r;
  r.kind = QueryKind::Hypothesis;
  double llr = 0;
  for (long i = 0; i < params.cap; ++i) {
    bool x = outcome(i);
    if (flip) x = !x;
    r.successes += x;
    llr += x ? step_true : step_false;
    if (llr >= log_a) {
      r.verdict = Verdict::Rejected;
      r.runs_used = i + 1;
      return r;
    }
    if (llr <= log_b) {
      r.verdict = Verdict::Accepted;
      r.runs_used = i + 1;
      return r;
    }
  }
  r.verdict = Verdict::Undecided;
  r.runs_used = params.cap;
  return r;
}

QueryResult hypothesis_test(const Model& m, const Property& p, const HypothesisParams& params, std::uint64_t seed,
                            int jobs) {
  if (jobs <= 0) jobs = default_jobs();
  const long batch = std::max(32L, 16L * jobs);
  std::vector<char> cache;
  auto outcome = [&](long i) -> bool {
    while (i >= static_cast<long>(cache.size())) {
      long from = static_cast<long>(cache.size());
      long to = std::min(from + batch, params.cap);
      cache.resize(to, 0);
      parallel_for_index(from, to, jobs, [&](long k) { cache[k] = p.holds(m, seed, static_cast<std::uint64_t>(k)); });
    }
    return cache[i];
  };
  QueryResult r = sprt(outcome, params);
  r.seed = seed;
  return r;
}

std::pair<double, double> mean_half_width(const std::vector<double>& xs) {
  if (xs.empty()) return {0, 0};
  double n = static_cast<double>(xs.size());
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0};
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / (n - 1));
  if (sd == 0) return {mean, 0};
  boost::math::students_t dist(n - 1);
  double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  return {mean, t * sd / std::sqrt(n)};
}

namespace {

class ExtremumProbe : public RunListener {
 public:
  ExtremumProbe(const Model& m, const std::string& text, Extremum mode) : mode_(mode) {
    e_ = m.compile_global(text);
    if (e_.kind() == ValueKind::Bool) throw ExprError("expected a numeric expression: " + text);
  }
  bool point(const Model& m, const NetworkState& s, double dt) override {
    take(m, s, dt);
    return true;
  }
  bool segment(const Model& m, const NetworkState& s, double a, double b) override {
    take(m, s, a);
    take(m, s, b);
    return true;
  }
  double value() const { return value_; }

 private:
  void take(const Model& m, const NetworkState& s, double dt) {
    StateEnv env(m, s);
    double v = e_.eval(env, dt);
    if (!seen_ || (mode_ == Extremum::Max ? v > value_ : v < value_)) value_ = v;
    seen_ = true;
  }
  expr::Compiled e_;
  Extremum mode_;
  bool seen_ = false;
  double value_ = 0;
};

}  // namespace

QueryResult expected_value(const Model& m, double bound, long n, Extremum mode, const std::string& expr,
                           std::uint64_t seed, int jobs) {
  if (n < 1) throw std::invalid_argument("expected_value needs at least one run");
  QueryResult r;
  r.kind = QueryKind::Expected;
  r.seed = seed;
  r.runs_used = n;
  r.values.assign(n, 0);
  ExtremumProbe check(m, expr, mode);  // surfaces compile errors before spawning work
  parallel_for_index(0, n, jobs, [&](long i) {
    ExtremumProbe probe(m, expr, mode);
    SimOptions o;
    o.bound = bound;
    o.seed = seed;
    o.stream = static_cast<std::uint64_t>(i);
    o.record_events = false;
    o.listener = &probe;
    simulate(m, o);
    r.values[i] = probe.value();
  });
  std::tie(r.mean, r.half_width) = mean_half_width(r.values);
  return r;
}

QueryResult simulate_batch(const Model& m, double bound, long n, const std::vector<std::string>& watch,
                           std::uint64_t seed, int jobs) {
  QueryResult r;
  r.kind = QueryKind::Simulate;
  r.seed = seed;
  r.runs_used = n;
  r.runs.resize(n);
  parallel_for_index(0, n, jobs, [&](long i) {
    SimOptions o;
    o.bound = bound;
    o.seed = seed;
    o.stream = static_cast<std::uint64_t>(i);
    o.watch = watch;
    r.runs[i] = simulate(m, o);
  });
  return r;
}

// ---- duality --------------------------------------------------------------------

std::string negate_predicate(const std::string& pred) {
  auto a = pred.find_first_not_of(" \t");
  auto b = pred.find_last_not_of(" \t");
  std::string t = a == std::string::npos ? std::string() : pred.substr(a, b - a + 1);
  if (t.size() >= 3 && t[0] == '!' && t[1] == '(' && t.back() == ')') {
    int depth = 0;
    bool whole = true;
    for (size_t i = 1; i < t.size(); ++i) {
      if (t[i] == '(') ++depth;
      else if (t[i] == ')') --depth;
      if (depth == 0 && i + 1 < t.size()) {
        whole = false;
        break;
      }
    }
    if (whole) return t.substr(2, t.size() - 3);
  }
  return "!(" + t + ")";
}

HypothesisQuery dualize(const HypothesisQuery& q) {
  HypothesisQuery d;
  d.property.shape = q.property.shape == Shape::Always ? Shape::Eventually : Shape::Always;
  d.property.predicate = negate_predicate(q.property.predicate);
  d.property.bound = q.property.bound;
  d.cmp = q.cmp == Comparison::AtLeast ? Comparison::AtMost : Comparison::AtLeast;
  d.p = std::round((1.0 - q.p) * 1e12) / 1e12;
  return d;
}

QueryResult run_hypothesis(const Model& m, const HypothesisQuery& q, HypothesisParams params, std::uint64_t seed,
                           int jobs) {
  params.p0 = q.p;
  params.cmp = q.cmp;
  return hypothesis_test(m, PathQuery(q.property), params, seed, jobs);
}

// ---- export ---------------------------------------------------------------------

void write_result_header(std::ostream& os) { os << "query_id,kind,lo,hi,verdict,runs_used,seed\n"; }

void write_result_row(std::ostream& os, const std::string& id, const QueryResult& r) {
  std::string lo = "-", hi = "-", verdict = "-";
  switch (r.kind) {
    case QueryKind::Estimate:
      lo = csv::num(r.lo);
      hi = csv::num(r.hi);
      break;
    case QueryKind::Hypothesis: verdict = to_string(r.verdict); break;
    case QueryKind::Expected:
      lo = csv::num(r.mean - r.half_width);
      hi = csv::num(r.mean + r.half_width);
      break;
    case QueryKind::Simulate: break;
  }
  os << id << ',' << to_string(r.kind) << ',' << lo << ',' << hi << ',' << verdict << ',' << r.runs_used << ','
     << r.seed << '\n';
}

void write_histogram_csv(std::ostream& os, const std::vector<double>& values) {
  os << "run,value\n";
  for (size_t i = 0; i < values.size(); ++i) os << i << ',' << csv::num(values[i]) << '\n';
}

}  // namespace stasmc
