#pragma once
// Observer automata: constraint monitors composed with a network, and
// run-level properties that evaluate a constraint over the events of a run.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stasmc/monitors.hpp"
#include "stasmc/smc.hpp"
#include "stasmc/sta.hpp"

namespace stasmc {

// Where a constraint tag comes from: every send on a broadcast channel, or
// every rising edge of a network predicate (a predicate already true at
// time 0 counts as an occurrence at 0). `id` optionally gives the payload
// id, evaluated in the state right after the occurrence.
struct EventBinding {
  std::string tag;
  std::string channel;
  std::string predicate;
  std::string id;
  bool operator==(const EventBinding&) const = default;
};

struct Attached {
  Network network;
  std::string name;
  // Network predicate that becomes true when the observer sees a violation.
  // For execution and end-to-end constraints the failing tracker is removed
  // at the next step, so query it as "eventually" / "always not". Empty for
  // comparison constraints, which are only decided at run end.
  std::string fail_predicate;
  std::vector<std::pair<std::string, std::string>> taps;  // tag -> tap instance
};

// Adds one tap observer per constraint tag plus the constraint observer
// `name`. Observers only receive on broadcast channels and read model state.
// Throws ModelError for unknown or binary channels, missing bindings,
// malformed predicates, name clashes, and id-less matching where ids are
// given for only one side.
Attached attach(const ConstraintSpec& spec, const Network& net, const std::vector<EventBinding>& bindings,
                const std::string& name);

// Bounded response over network predicates: every time `premise` becomes
// true, `response` must hold at some instant within `window` ms.
Attached attach_response(const Network& net, const std::string& name, const std::string& premise,
                         const std::string& response, double window);

// Fails as soon as `bad` holds.
Attached attach_invariant(const Network& net, const std::string& name, const std::string& bad);

// Tap occurrences of one run, in order, as a monitor event stream.
class TapRecorder : public RunListener {
 public:
  TapRecorder(const Model& m, const std::vector<std::pair<std::string, std::string>>& taps);
  bool event(const Model& m, const NetworkState& s, const Event& e) override;
  const EventStream& stream() const { return stream_; }
  void clear() { stream_.clear(); }

 private:
  struct Tap {
    int instance;
    int count_slot;
    int id_slot;
    std::string tag;
  };
  std::vector<Tap> taps_;
  EventStream stream_;
};

EventStream record_taps(const Model& m, const Attached& a, double bound, std::uint64_t seed,
                        std::uint64_t stream = 0);

// Holds when the constraint has no failing occurrence over the run, or,
// with a weakly-hard window, when the non-vacuous verdicts satisfy it.
class MonitorProperty : public Property {
 public:
  MonitorProperty(ConstraintSpec spec, Attached attached, double bound, std::optional<WeaklyHard> wh = {});
  bool holds(const Model& m, std::uint64_t seed, std::uint64_t stream) const override;
  std::string describe() const override;
  std::vector<MonitorVerdict> verdicts(const Model& m, std::uint64_t seed, std::uint64_t stream) const;

 private:
  ConstraintSpec spec_;
  Attached att_;
  double bound_;
  std::optional<WeaklyHard> wh_;
};

}  // namespace stasmc
