#pragma once
// Statistical queries over independent runs: path checking, probability
// estimation, sequential hypothesis testing, expected extrema, batches.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "stasmc/sim.hpp"

namespace stasmc {

enum class Shape { Always, Eventually };
const char* to_string(Shape s);

struct PathProperty {
  Shape shape = Shape::Always;
  std::string predicate;
  double bound = 0;
  bool operator==(const PathProperty&) const = default;
};

// Streaming evaluation of a path property. Between discrete changes the
// predicate is checked at every instant where one of its clock comparisons
// can flip, and in between, so piecewise-linear evolution is covered.
class PathChecker : public RunListener {
 public:
  PathChecker(const Model& m, const PathProperty& p);
  bool point(const Model&, const NetworkState& s, double dt) override;
  bool segment(const Model&, const NetworkState& s, double a, double b) override;
  bool decided() const { return decided_; }
  // Verdict; for an undecided always-property this means "held throughout".
  bool result() const;
  double witness_time() const { return witness_; }  // time of the deciding observation
  void reset();

 private:
  bool observe(const NetworkState& s, double dt);
  bool finish_at_bound();
  const Model& m_;
  PathProperty p_;
  expr::Compiled pred_;
  std::vector<expr::Compiled> cmps_;
  bool decided_ = false;
  bool value_ = false;
  double witness_ = -1;
};

// Re-simulates the run (runs are a pure function of model, bound, seed,
// stream) and checks the property over it.
bool check_path(const Model& m, const Run& run, const PathProperty& p);

// Something that can be decided for run `stream` of seed `seed`.
class Property {
 public:
  virtual ~Property() = default;
  virtual bool holds(const Model& m, std::uint64_t seed, std::uint64_t stream) const = 0;
  virtual std::string describe() const = 0;
};

class PathQuery : public Property {
 public:
  explicit PathQuery(PathProperty p) : p_(std::move(p)) {}
  bool holds(const Model& m, std::uint64_t seed, std::uint64_t stream) const override;
  std::string describe() const override;
  const PathProperty& path() const { return p_; }

 private:
  PathProperty p_;
};

// Adapts any callable; mostly for tests and fixtures.
class FunctionProperty : public Property {
 public:
  using Fn = std::function<bool(const Model&, std::uint64_t, std::uint64_t)>;
  FunctionProperty(std::string name, Fn f) : name_(std::move(name)), f_(std::move(f)) {}
  bool holds(const Model& m, std::uint64_t seed, std::uint64_t stream) const override { return f_(m, seed, stream); }
  std::string describe() const override { return name_; }

 private:
  std::string name_;
  Fn f_;
};

struct EstimateParams {
  double epsilon = 0.05;
  double alpha = 0.05;
};

enum class Comparison { AtLeast, AtMost };  // Pr(...) >= p  /  Pr(...) <= p

struct HypothesisParams {
  double p0 = 0.5;
  double delta = 0.01;
  double alpha = 0.05;
  double beta = 0.05;
  long cap = 10000;
  Comparison cmp = Comparison::AtLeast;
};

enum class Verdict { Accepted, Rejected, Undecided };
const char* to_string(Verdict v);

enum class QueryKind { Estimate, Hypothesis, Expected, Simulate };
const char* to_string(QueryKind k);

struct QueryResult {
  QueryKind kind = QueryKind::Estimate;
  double lo = 0, hi = 1;            // Estimate
  double p_hat = 0;
  Verdict verdict = Verdict::Undecided;  // Hypothesis
  double mean = 0, half_width = 0;  // Expected
  std::vector<double> values;       // per-run extrema
  std::vector<Run> runs;            // Simulate
  long runs_used = 0;
  long successes = 0;
  std::uint64_t seed = 0;
};

long chernoff_runs(double epsilon, double alpha);

// jobs <= 0 uses the default worker count (see default_jobs()).
QueryResult estimate_probability(const Model& m, const Property& p, const EstimateParams& params,
                                 std::uint64_t seed, int jobs = 0);
QueryResult hypothesis_test(const Model& m, const Property& p, const HypothesisParams& params,
                            std::uint64_t seed, int jobs = 0);

// Sequential test over a stream of Bernoulli outcomes (outcome(i) for
// i = 0, 1, ...), shared by hypothesis_test and the tests.
QueryResult sprt(const std::function<bool(long)>& outcome, const HypothesisParams& params);

enum class Extremum { Min, Max };
QueryResult expected_value(const Model& m, double bound, long n, Extremum mode, const std::string& expr,
                           std::uint64_t seed, int jobs = 0);
// Student-t 95% half-width of the sample mean.
std::pair<double, double> mean_half_width(const std::vector<double>& xs);

QueryResult simulate_batch(const Model& m, double bound, long n, const std::vector<std::string>& watch,
                           std::uint64_t seed, int jobs = 0);

// Hypothesis query over a path property and its dual:
//   Pr[b]([] phi) >= p  <->  Pr[b](<> !phi) <= 1 - p
struct HypothesisQuery {
  PathProperty property;
  Comparison cmp = Comparison::AtLeast;
  double p = 0.5;
  bool operator==(const HypothesisQuery&) const = default;
};
HypothesisQuery dualize(const HypothesisQuery& q);
std::string negate_predicate(const std::string& pred);
QueryResult run_hypothesis(const Model& m, const HypothesisQuery& q, HypothesisParams params,
                           std::uint64_t seed, int jobs = 0);

// Worker count: STASMC_JOBS if set, else hardware concurrency.
int default_jobs();
// Calls f(i) for i in [begin, end) on up to `jobs` workers.
void parallel_for_index(long begin, long end, int jobs, const std::function<void(long)>& f);

// CSV: query_id,kind,lo,hi,verdict,runs_used,seed
void write_result_header(std::ostream& os);
void write_result_row(std::ostream& os, const std::string& id, const QueryResult& r);
// CSV: run,value
void write_histogram_csv(std::ostream& os, const std::vector<double>& values);

}  // namespace stasmc
