#pragma once
// Networks of stochastic timed automata: the declarative description, its
// compiled form (Model), runtime state, and the structural operations that
// do not involve randomness.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stasmc/expr.hpp"

namespace stasmc {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- declarative description (times in ms) ---------------------------------

struct ClockDecl {
  std::string name;
  double initial = 0;
};

struct VarDecl {
  std::string name;
  ValueKind kind = ValueKind::Int;
  double initial = 0;
  int size = 0;                 // > 0 declares a fixed-size array (globals only)
  std::vector<double> init;     // optional per-element initial values
};

struct ClockBound {
  std::string clock;
  bool strict = false;  // '<' instead of '<='
  std::string bound;    // expression without clocks
};

struct Location {
  std::string name;
  std::vector<ClockBound> invariant;
  std::map<std::string, std::string> rates;  // clock -> expression (default 1)
  double exit_rate = 1.0;
  std::set<std::string> labels;
};

enum class SyncKind { None, Send, Recv };

struct Sync {
  SyncKind kind = SyncKind::None;
  std::string channel;
};

struct Spawn {
  std::string tmpl;
  std::vector<std::string> args;
};

struct Edge {
  std::string source, target;
  std::string guard;  // empty means true
  Sync sync;
  double weight = 1.0;
  std::vector<std::string> updates;  // "x = expr", "arr[i] = expr", "clk = 0"
  std::optional<Spawn> spawn;
};

struct Param {
  std::string name;
  ValueKind kind = ValueKind::Int;
};

struct Template {
  std::string name;
  std::vector<Param> params;
  std::vector<ClockDecl> clocks;
  std::vector<VarDecl> vars;
  std::vector<Location> locations;
  std::string initial;
  std::vector<Edge> edges;
  bool spawnable = false;
  bool observer = false;  // never sends, never writes globals; excluded from the race
};

enum class ChannelKind { Binary, Broadcast };

struct Channel {
  std::string name;
  ChannelKind kind = ChannelKind::Binary;
};

struct InstanceDecl {
  std::string name;
  std::string tmpl;
  std::vector<double> args;
};

struct Network {
  std::vector<Channel> channels;
  std::vector<VarDecl> globals;
  std::vector<Template> templates;
  std::vector<InstanceDecl> instances;

  const Template* find_template(const std::string& n) const;
  Template* find_template(const std::string& n);
  bool operator==(const Network&) const;
};

// Labels with a special meaning to the engine.
inline constexpr const char* kDespawnLabel = "despawn";

// ---- validation ---------------------------------------------------------------

struct Violation {
  std::string tmpl;   // empty for network-level problems
  int edge = -1;      // edge index within the template, -1 if not edge related
  std::string message;
  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool contains(const std::string& fragment) const;
  std::string to_string() const;
  bool operator==(const ValidationReport&) const = default;
};

ValidationReport validate(const Network& net);

// ---- compiled form -------------------------------------------------------------

struct CUpdate {
  enum class Target { SelfVar, SelfClock, Global, GlobalElem } target;
  int slot = 0;
  int size = 0;
  ValueKind kind = ValueKind::Real;
  expr::Compiled index;
  expr::Compiled value;
};

// Guard conjunct prepared for window analysis: for clock comparisons,
// diff = lhs - rhs and op the comparison; op == Const when not analysable.
struct CAtom {
  bool clocked = false;
  expr::Compiled diff;
  expr::Op op = expr::Op::Const;
};

struct CEdge {
  int source = 0, target = 0;
  expr::Compiled guard;             // empty == true
  std::vector<expr::Compiled> atoms;  // top-level conjuncts of guard
  std::vector<CAtom> atom_info;       // parallel to atoms
  SyncKind sync = SyncKind::None;
  int channel = -1;
  double weight = 1;
  std::vector<CUpdate> updates;
  int spawn_tmpl = -1;
  std::vector<expr::Compiled> spawn_args;
  int index = 0;  // position in the declared edge list
};

struct CBound {
  int clock = 0;
  bool strict = false;
  expr::Compiled bound;
};

struct CLocation {
  std::string name;
  std::vector<CBound> invariant;
  std::vector<expr::Compiled> rates;  // one per clock
  bool all_rates_one = true;
  double exit_rate = 1;
  std::uint64_t labels = 0;
  bool terminal = false;  // no outgoing edges or despawn label
  std::vector<int> out;   // edge indices
};

struct CTemplate {
  std::string name;
  std::vector<std::string> clock_names;
  std::vector<double> clock_init;
  std::vector<std::string> var_names;  // locals followed by parameters
  std::vector<ValueKind> var_kinds;
  std::vector<double> var_init;
  int n_locals = 0;
  std::vector<CLocation> locations;
  std::vector<CEdge> edges;
  int initial = 0;
  bool spawnable = false;
  bool observer = false;

  int clock_index(const std::string& n) const;
  int var_index(const std::string& n) const;
  int location_index(const std::string& n) const;
};

struct GlobalSlot {
  std::string name;
  int slot = 0;
  int size = 0;
  ValueKind kind = ValueKind::Int;
};

class Model {
 public:
  explicit Model(Network net);  // throws ModelError when validation fails
  static ValidationReport validate_only(const Network& net);

  const Network& network() const { return net_; }
  const std::vector<CTemplate>& templates() const { return tmpls_; }
  const CTemplate& tmpl(int i) const { return tmpls_[i]; }
  int template_index(const std::string& n) const;
  // Runtime id of a static instance: model instances get 0.. in declaration
  // order, observer instances ids from kObserverIdBase on. -1 if unknown.
  int instance_index(const std::string& n) const;
  int static_id(std::size_t decl) const { return static_ids_[decl]; }
  const std::string* static_name(int id) const;
  int model_static_count() const { return n_model_static_; }
  int channel_index(const std::string& n) const;
  const std::vector<Channel>& channels() const { return net_.channels; }
  const std::vector<GlobalSlot>& globals() const { return globals_; }
  int global_count() const { return n_global_slots_; }
  const std::vector<double>& global_init() const { return global_init_; }
  int label_id(const std::string& label) const;  // -1 if unknown
  const std::vector<std::string>& labels() const { return label_names_; }
  std::size_t static_count() const { return net_.instances.size(); }

  // Compile a network-level expression (query predicate, watch, observer
  // condition). Identifiers: globals, Inst.var, Inst.clock, Inst.Location,
  // Inst.label, Template.label / Template.Location (any live instance), time.
  expr::Compiled compile_global(const std::string& text) const;
  std::optional<expr::Resolved> resolve_global(const std::string& name) const;

 private:
  Model(Network net, ValidationReport& rep);
  std::optional<expr::Resolved> resolve_in(const CTemplate& t, const std::string& name) const;

  Network net_;
  std::vector<CTemplate> tmpls_;
  std::vector<GlobalSlot> globals_;
  std::vector<double> global_init_;
  int n_global_slots_ = 0;
  std::vector<std::string> label_names_;
  std::map<std::string, int> tmpl_index_, inst_index_, chan_index_, global_index_;  // inst: decl index
  std::vector<int> static_ids_;
  int n_model_static_ = 0;
  friend struct ModelAccess;
};

// ---- runtime state --------------------------------------------------------------

struct InstanceState {
  int id = 0;
  int tmpl = 0;
  int loc = 0;
  bool spawned = false;
  std::vector<double> clocks;
  std::vector<double> vars;
  bool operator==(const InstanceState&) const = default;
};

struct NetworkState {
  std::vector<double> globals;
  std::vector<InstanceState> instances;  // static instances first, then live spawns by id
  double time = 0;
  int next_id = 0;           // model-spawned ids
  int next_observer_id = 0;  // observer-spawned ids (separate range)
  bool operator==(const NetworkState&) const = default;

  const InstanceState* find(int id) const;
};

inline constexpr int kObserverIdBase = 1 << 30;

NetworkState initial_state(const Model& m);

// Evaluation environment over a state. `self` may be null for network-level
// expressions. Clock rates are computed lazily from the current locations.
class StateEnv : public expr::Env {
 public:
  StateEnv(const Model& m, const NetworkState& s, const InstanceState* self = nullptr)
      : m_(m), s_(s), self_(self) {}
  void set_self(const InstanceState* self) { self_ = self; }

  double global(int slot) const override { return s_.globals[slot]; }
  double self_var(int slot) const override { return self_->vars[slot]; }
  double self_clock(int slot) const override { return self_->clocks[slot]; }
  double self_clock_rate(int slot) const override { return rate_of(*self_, slot); }
  double inst_var(int inst, int slot) const override { return at(inst).vars[slot]; }
  double inst_clock(int inst, int slot) const override { return at(inst).clocks[slot]; }
  double inst_clock_rate(int inst, int slot) const override { return rate_of(at(inst), slot); }
  bool inst_at(int inst, int loc) const override { return at(inst).loc == loc; }
  bool inst_label(int inst, int label) const override;
  bool any_at(int tmpl, int loc) const override;
  bool any_label(int tmpl, int label) const override;
  double time() const override { return s_.time; }

  double rate_of(const InstanceState& is, int clock) const;

 private:
  // Static instance by id; model statics sit at their id, observers after spawns.
  const InstanceState& at(int id) const {
    return id < kObserverIdBase ? s_.instances[id] : *s_.find(id);
  }
  const Model& m_;
  const NetworkState& s_;
  const InstanceState* self_;
};

// A reference to one edge of one live instance.
struct EdgeRef {
  int instance_id = 0;
  int edge = 0;        // compiled edge index within the instance's template
  double weight = 1;
  bool operator==(const EdgeRef&) const = default;
};

// Edges of `instance_id` leaving its current location whose guard holds now.
// Binary receives are kept only if some other instance has an enabled send
// on the same channel; broadcast receives are kept whenever the guard holds.
std::vector<EdgeRef> enabled_edges(const Model& m, const NetworkState& s, int instance_id);

// Adds a fresh instance of a spawnable template. Throws ModelError otherwise.
NetworkState instantiate_spawn(const Model& m, const NetworkState& s, const std::string& tmpl,
                               const std::vector<double>& args);
int spawn_into(const Model& m, NetworkState& s, int tmpl, const std::vector<double>& args);

// Removes spawned instances parked at terminal locations; returns their ids.
std::vector<int> reap_terminated(const Model& m, NetworkState& s);

}  // namespace stasmc
