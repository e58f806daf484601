#pragma once
// Requirement catalog R1-R50 for the platoon model and its evaluation.
// Entries name model quantities only through the tap registry: predicate,
// quantity and event names in braces, e.g. "{v1.auto} && {sign.stop}".

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stasmc/cas.hpp"
#include "stasmc/monitors.hpp"
#include "stasmc/smc.hpp"

namespace stasmc::cas {

enum class Check {
  Response,   // premise rising edge -> response within window
  Invariant,  // bad never holds
  Monitor,    // timing constraint over tapped events
  Expected,   // expected extremum of a quantity below a limit
};
const char* to_string(Check c);

struct RequirementSpec {
  std::string id;     // "R1" .. "R50"
  std::string prose;  // short description
  Check check = Check::Invariant;
  QueryKind kind = QueryKind::Hypothesis;
  double bound = 3000;  // run length, ms

  // Response / Invariant
  std::string premise, response, bad;
  double window = 0;

  // Monitor: constraint over tags, each tag bound to an exported event.
  std::optional<ConstraintSpec> constraint;
  std::vector<std::pair<std::string, std::string>> bindings;  // tag -> event name
  bool dual = false;  // test Pr(violation) <= 1 - p0 instead of Pr(holds) >= p0

  // Hypothesis
  double p0 = 0.95;

  // Expected
  std::string quantity;
  Extremum extremum = Extremum::Max;
  double limit = 0;  // satisfied when the mean is below
  long runs = 100;

  std::string scale_note;  // unit or window adaptation, empty when none
};

// The 50 entries in id order.
std::vector<RequirementSpec> requirement_catalog();
// Throws std::out_of_range for unknown ids.
const RequirementSpec& find_requirement(const std::vector<RequirementSpec>& catalog, const std::string& id);

// Replaces every {name} with the parenthesized predicate or quantity.
// Throws ModelError for names the registry does not export.
std::string bind_taps(const std::string& text, const TapRegistry& taps);

enum class Status { Satisfied, Violated, Inconclusive };
const char* to_string(Status s);

struct EvalOptions {
  std::uint64_t seed = 1;
  int jobs = 0;
  std::optional<double> bound;  // overrides the entry's bound
  HypothesisParams hypothesis{0.95, 0.02, 0.05, 0.05, 3000, Comparison::AtLeast};
};

struct RequirementResult {
  std::string id;
  std::string query;  // the evaluated query as written, with {tap} names
  Status status = Status::Inconclusive;
  QueryResult result;
  long counterexample = -1;  // stream index of a violating run
};

// The composed network and property an entry is decided on.
struct BoundRequirement {
  Network network;
  std::string query;
  std::unique_ptr<Property> property;  // null for Expected entries
  std::string expr;                    // Expected entries
};
BoundRequirement bind_requirement(const RequirementSpec& r, const Platoon& p, double bound);

RequirementResult evaluate_requirement(const RequirementSpec& r, const Platoon& p, const EvalOptions& opt);

// FNV-1a over the canonical JSON form, as 16 hex digits.
std::string config_hash(const PlatoonConfig& c);

struct SuiteReport {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string engine_version;
  std::vector<RequirementResult> results;  // catalog order
  std::vector<double> wall_ms;             // parallel to results; kept out of the CSV
  bool any_violated() const;
};

// Evaluates the entries named in `only` (all when empty). Throws
// std::out_of_range for unknown ids.
SuiteReport run_suite(const PlatoonConfig& config, const std::vector<std::string>& only, const EvalOptions& opt);

// CSV: id,check,status,lo,hi,mean,half_width,runs_used,counterexample,seed,config_hash,engine_version,query
// Commas inside the query echo are written as ';'.
void write_suite_csv(std::ostream& os, const SuiteReport& r);

}  // namespace stasmc::cas
