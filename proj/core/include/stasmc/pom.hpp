#pragma once
// Synchronous boolean block networks evaluated in discrete steps, pattern
// builders for bounded temporal properties and timing constraints, and an
// exhaustive bounded verifier.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stasmc/monitors.hpp"

namespace stasmc::pom {

class BlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind {
  Const,
  Not,
  And,
  Or,
  Implies,
  WithinImplies,  // inputs: In, Obs
  Extender,       // n: steps
  Detector,       // n: detect steps, m: output steps
  Delay,          // n: steps
  Pulse,          // n: period, m: phase delay, width: fraction of the period
  Compare,        // a <rel> b, or a <rel> value when there is one input
  Goto,           // tag
  From,           // tag
  Objective,
  Assumption,
};
const char* to_string(Kind k);
Kind parse_kind(const std::string& s);

struct Block {
  std::string name;  // output signal
  Kind kind = Kind::Const;
  std::vector<std::string> in;
  int n = 0, m = 0;
  double width = 0;
  double value = 0;  // Const output, Compare constant
  Relation rel = Relation::Ge;
  std::string tag;
  bool operator==(const Block&) const = default;
};

struct BlockNetwork {
  std::vector<std::string> inputs;          // free boolean signals
  std::vector<std::string> numeric_inputs;  // given by the trace, never enumerated
  std::vector<Block> blocks;
  double step_ms = 10;
  bool operator==(const BlockNetwork&) const = default;

  // Appends a block and returns its output name.
  std::string add(Block b);
  int count(Kind k) const;
};

BlockNetwork from_json(const nlohmann::json& j);
nlohmann::json to_json(const BlockNetwork& n);
BlockNetwork load(const std::string& path);

// Per-step values of named signals (booleans as 0/1).
struct StepTrace {
  int length = 0;
  std::map<std::string, std::vector<double>> signals;
  bool at(const std::string& s, int k) const { return signals.at(s)[k] != 0; }
};
// CSV: step,time_ms,<signal>...
void write_trace_csv(std::ostream& os, const StepTrace& t, double step_ms);

struct ObjectiveReport {
  std::string name;
  int first_fail = -1;  // -1: valid on this trace
  int pending = 0;      // within-implies durations still open at the end
};

struct EvalResult {
  bool admissible = true;
  StepTrace trace;  // inputs plus every block output
  std::vector<ObjectiveReport> objectives;
  bool valid() const;
};

// Checked, ordered form of a network. Throws BlockError on unknown
// signals, unpaired Goto/From tags, bad parameters and combinational cycles
// (only Delay with n >= 1 and Detector break a cycle).
class Compiled {
 public:
  explicit Compiled(const BlockNetwork& n);
  EvalResult eval(const StepTrace& inputs, bool keep_signals = true) const;
  // Objective verdict only; returns the first failing step or -1, and
  // nullopt when the trace violates an assumption.
  std::optional<int> first_failure(const std::vector<std::vector<char>>& bits) const;
  const BlockNetwork& network() const { return net_; }

 private:
  struct Node {
    Kind kind;
    std::vector<int> in;
    int out;
    int n, m;
    double width, value;
    Relation rel;
    int state;  // offset into the per-run state vector
  };
  template <class Get>
  int run(int length, Get&& input, bool keep, EvalResult* res) const;

  BlockNetwork net_;
  std::vector<std::string> signal_names_;
  std::vector<int> input_signals_, numeric_signals_;
  std::vector<Node> registers_, comb_;
  std::vector<int> objective_nodes_;  // indices into comb_, declaration order
  std::vector<std::string> objective_names_;
  std::vector<std::vector<int>> objective_within_;  // state offsets of upstream within-implies blocks
  int state_size_ = 0;
};

EvalResult eval(const BlockNetwork& n, const StepTrace& inputs);

// ---- pattern builders ----------------------------------------------------------
// Temporal patterns use boolean inputs p and q and are anchored at step 0,
// except response, which is checked at every step. t >= 1.
BlockNetwork always_within(int t);              // G[0,t] p
BlockNetwork eventually_within(int t);          // F[0,t] p
BlockNetwork until_within(int t);               // p U[0,t] q
BlockNetwork response_within(int t);            // G (p -> F[0,t] q)

// Constraint patterns; bounds in ms are mapped to steps of step_ms.
struct PatternOptions {
  double step_ms = 10;
  bool lower_cut = false;  // execution / end-to-end: response earlier than lower fails
};
BlockNetwork constraint_pattern(const ConstraintSpec& spec, const PatternOptions& o = {});
BlockNetwork energy_bound(double lower, double upper, double step_ms = 10);  // numeric input "energy"

// Builds a pattern by name: always_within, eventually_within, until_within,
// response_within (param "t"), energy_bound ("lower", "upper"), or any
// constraint kind with the ConstraintSpec parameter names.
BlockNetwork build_pattern(const std::string& kind, const nlohmann::json& params);

// ---- bounded verification ------------------------------------------------------
enum class Status { Valid, Counterexample, BudgetExceeded };
const char* to_string(Status s);

struct VerifyResult {
  Status status = Status::Valid;
  StepTrace counterexample;  // inputs only, horizon steps
  std::string objective;
  int fail_step = -1;
  std::uint64_t traces_checked = 0;
};

// Enumerates every boolean input trace of `horizon` steps when
// 2^(inputs * horizon) <= budget. Traces are numbered by reading their bits
// as a binary number with step 0, first input as the lowest bit; the
// counterexample is the lowest-numbered failing admissible trace.
VerifyResult verify_bounded(const BlockNetwork& n, int horizon, std::uint64_t budget, int jobs = 0);

}  // namespace stasmc::pom
