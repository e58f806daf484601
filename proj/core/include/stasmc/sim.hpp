#pragma once
// Seeded simulation of a network: per-instance delay sampling, race,
// synchronisation, weighted branching, observers, signal traces.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stasmc/rng.hpp"
#include "stasmc/sta.hpp"

namespace stasmc {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class EventKind { Init, Internal, Send, Recv, Spawn, Despawn, Deadlock, End };
const char* to_string(EventKind k);

struct Event {
  double time = 0;
  long step = 0;       // model step counter; receivers share the sender's step
  int instance = -1;   // -1 for run-level events (Deadlock, End)
  int tmpl = -1;
  int edge = -1;
  int from = -1, to = -1;  // location indices
  EventKind kind = EventKind::Internal;
  int channel = -1;
  bool observer = false;
  bool operator==(const Event&) const = default;
};

using Trace = std::vector<std::pair<double, double>>;  // (time, value)

struct Run {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double bound = 0;
  double end_time = 0;
  bool deadlock = false;
  bool stopped_early = false;  // a listener asked to stop
  std::vector<Event> events;
  std::vector<std::string> watch;
  std::vector<Trace> signals;
  NetworkState final_state;
};

// Events of the model only: observer instances and their receptions removed.
std::vector<Event> model_events(const std::vector<Event>& events);

// Streaming access to the evolving state. Between discrete changes the
// state evolves linearly: the value at time state.time + dt is obtained by
// evaluating with offset dt. Return false to end the run early.
class RunListener {
 public:
  virtual ~RunListener() = default;
  // State after a discrete change (or the initial state), observed at offset dt.
  virtual bool point(const Model&, const NetworkState&, double /*dt*/) { return true; }
  // Continuous evolution over offsets [a, b] with no discrete change inside.
  virtual bool segment(const Model&, const NetworkState&, double /*a*/, double /*b*/) { return true; }
  // A discrete event. Variables in the state already carry the event's
  // updates; clocks are still those at state.time (e.time - state.time earlier).
  virtual bool event(const Model&, const NetworkState&, const Event&) { return true; }
};

// What one instance looks like to the delay sampler: the earliest offset
// at which it can act, the invariant deadline and the latest offset any
// of its edges stays enabled (kInf when open ended).
struct DelayView {
  double earliest = 0;
  double deadline = kInf;
  double latest = kInf;
  double exit_rate = 1;
};

// Uniform on [earliest, min(deadline, latest)] when that is finite,
// earliest + Exp(exit_rate) otherwise.
double sample_delay(const DelayView& v, RngStream& rng);

struct SimOptions {
  double bound = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<std::string> watch;
  bool record_events = true;
  RunListener* listener = nullptr;
  long max_steps = 50'000'000;
};

class Simulator {
 public:
  Simulator(const Model& m, RngStream& rng, RunListener* listener = nullptr, bool record = true);

  NetworkState initial();
  // Advance one model step (or to the bound). Returns false once the run is over.
  bool step(NetworkState& s, double bound);

  const std::vector<Event>& events() const { return events_; }
  std::vector<Event> take_events() { return std::move(events_); }
  bool deadlocked() const { return deadlock_; }
  bool stopped() const { return stopped_; }
  long steps() const { return step_; }

  // Invariant deadline (offset) of one instance; throws SimError on
  // nonpositive rates for a binding bound.
  double deadline(const NetworkState& s, const InstanceState& is) const;
  // Earliest and latest offsets in [0, limit] at which a non-receive edge
  // of `is` can fire; nullopt if none.
  std::optional<std::pair<double, double>> active_window(const NetworkState& s, const InstanceState& is,
                                                         double limit) const;

 private:
  struct Choice {
    int instance;  // index into s.instances
    int edge;
  };
  bool emit(const NetworkState& s, const Event& e);
  bool notify_point(const NetworkState& s, double dt);
  bool notify_segment(const NetworkState& s, double a, double b);
  std::vector<int> enabled_active(const NetworkState& s, int idx, double dt) const;
  std::vector<int> enabled_recv(const NetworkState& s, int idx, int channel, double dt) const;
  bool receiver_exists(const NetworkState& s, int sender_idx, int channel, double dt) const;
  std::optional<std::pair<double, double>> edge_window(const NetworkState& s, const InstanceState& is,
                                                       const CEdge& e, double limit) const;
  int pick_weighted(const InstanceState& is, const std::vector<int>& edges);
  void fire(NetworkState& s, int sender_idx, int edge, double tau);
  bool observer_urgent(NetworkState& s, double from, double until, bool inclusive);
  void advance(NetworkState& s, double dt);

  const Model& m_;
  RngStream& rng_;
  RunListener* listener_;
  bool record_;
  std::vector<Event> events_;
  long step_ = 0;
  double obs_offset_ = 0;
  bool deadlock_ = false;
  bool stopped_ = false;
};

Run simulate(const Model& m, const SimOptions& opt);
Run simulate(const Network& net, double bound, std::uint64_t seed, const std::vector<std::string>& watch = {});

std::string instance_name(const Model& m, const InstanceState& is);
std::string instance_name(const Model& m, int id, int tmpl);

// Columns: time_ms,instance,location,event_kind,channel
void write_events_csv(std::ostream& os, const Model& m, const Run& r);
// Columns: time_ms,value
void write_trace_csv(std::ostream& os, const Trace& t);

}  // namespace stasmc
