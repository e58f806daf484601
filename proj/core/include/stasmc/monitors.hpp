#pragma once
// Timing-constraint monitors over timestamped event streams, a brute-force
// reference evaluator, weakly-hard windows and offline CSV mode.

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace stasmc {

struct TimedEvent {
  double time = 0;
  std::string tag;
  long id = 0;  // 0: no payload id
  bool operator==(const TimedEvent&) const = default;
};
using EventStream = std::vector<TimedEvent>;

enum class ConstraintKind {
  Execution,
  EndToEnd,
  Synchronization,
  PeriodicCumulative,
  PeriodicNoncumulative,
  Sporadic,
  Comparison,
};
const char* to_string(ConstraintKind k);

enum class Relation { Lt, Le, Eq, Ge, Gt };
Relation parse_relation(const std::string& s);
const char* to_string(Relation r);

// Timing expression for comparison constraints: a sum of terms.
struct TimingTerm {
  enum class Kind { Const, EndToEnd, Wcet } kind = Kind::Const;
  double value = 0;        // Const
  std::string from, to;    // event tags for EndToEnd / Wcet
  bool operator==(const TimingTerm&) const = default;
};
using TimingExpr = std::vector<TimingTerm>;

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::Execution;
  double lower = 0, upper = 0;           // execution, end_to_end
  double tolerance = 0;                  // synchronization
  std::vector<std::string> members;      // synchronization
  double period = 0, jitter = 0;         // periodic
  double min = 0;                        // sporadic
  std::string in = "in", out = "out";    // execution in/out, end_to_end source/target
  std::string event = "e";               // periodic, sporadic
  TimingExpr lhs, rhs;                   // comparison
  Relation rel = Relation::Ge;
  bool operator==(const ConstraintSpec&) const = default;

  static ConstraintSpec execution(double lower, double upper, std::string in = "in", std::string out = "out");
  static ConstraintSpec end_to_end(double lower, double upper, std::string source = "source",
                                   std::string target = "target");
  static ConstraintSpec synchronization(double tolerance, std::vector<std::string> members);
  static ConstraintSpec periodic_cumulative(double period, double jitter, std::string event = "e");
  static ConstraintSpec periodic_noncumulative(double period, double jitter, std::string event = "e");
  static ConstraintSpec sporadic(double min, std::string event = "e");
  static ConstraintSpec comparison(TimingExpr lhs, Relation rel, TimingExpr rhs);

  // Throws std::invalid_argument when the parameters are inconsistent.
  void check() const;
  // Tags the constraint reads.
  std::vector<std::string> tags() const;
};

enum class Outcome { Success, Fail, Vacuous };
const char* to_string(Outcome o);

struct MonitorVerdict {
  long index = 0;     // occurrence number, in anchor order
  double time = 0;    // anchor time (in/source event, group start, occurrence, ...)
  Outcome outcome = Outcome::Success;
  bool operator==(const MonitorVerdict&) const = default;
};

inline constexpr double kMonitorTol = 1e-9;
inline constexpr double kStreamEnd = std::numeric_limits<double>::quiet_NaN();

// Incremental monitor. Feed events in time order, then finish().
class Monitor {
 public:
  explicit Monitor(ConstraintSpec spec);
  void on_event(const TimedEvent& e);  // throws std::invalid_argument on decreasing time
  void finish(double end_time = kStreamEnd);
  const std::vector<MonitorVerdict>& verdicts() const { return verdicts_; }
  bool any_fail() const;
  const ConstraintSpec& spec() const { return spec_; }

 private:
  struct Pending {
    long index;
    double time;
    long id;
  };
  void emit(long index, double time, Outcome o);
  ConstraintSpec spec_;
  std::vector<MonitorVerdict> verdicts_;
  double last_time_ = -std::numeric_limits<double>::infinity();
  bool finished_ = false;
  long count_ = 0;  // anchors seen
  // execution / end_to_end
  std::vector<Pending> pending_;
  // synchronization
  bool open_ = false;
  double group_start_ = 0;
  std::vector<char> seen_;
  // periodic / sporadic
  double prev_ = 0, first_ = 0;
  bool have_prev_ = false;
  // comparison
  EventStream log_;
};

std::vector<MonitorVerdict> run_monitor(const ConstraintSpec& spec, const EventStream& stream, double end_time = kStreamEnd);

// Reference evaluator: applies each kind's defining inequality to the whole
// stream at once. Shares no code with Monitor.
std::vector<MonitorVerdict> oracle_verdicts(const ConstraintSpec& spec, const EventStream& stream,
                                     double end_time = kStreamEnd);

// Comparison-constraint helpers.
std::optional<double> evaluate_timing(const TimingExpr& e, const EventStream& stream);
bool compare(double a, Relation r, double b);

struct WeaklyHard {
  int m = 0, k = 1;
};
enum class WhResult { Satisfied, Violated };
WhResult apply_weakly_hard(const std::vector<Outcome>& verdicts, const WeaklyHard& wh);
std::vector<Outcome> non_vacuous(const std::vector<MonitorVerdict>& v);

// Offline mode. Input columns: time_ms,tag,id (id may be empty or 0).
EventStream read_event_stream_csv(std::istream& is);
// Output columns: index,time,verdict
void write_verdict_csv(std::ostream& os, const std::vector<MonitorVerdict>& v);

}  // namespace stasmc
