#pragma once
// Cooperative platoon model: configuration, the generated STA network with
// its tap registry, the pure vehicle dynamics step and small fixtures.

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stasmc/observers.hpp"
#include "stasmc/sta.hpp"

namespace stasmc::cas {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { AutoLeader = 0, AutoFollower = 1, UserCtrl = 2 };
enum class Submode { ConstSpeed = 0, Acc = 1, Dec = 2, TurnLeft = 3, TurnRight = 4, Braking = 5, Static = 6 };
enum class SignType { Straight = 0, MaxSpeedLimit = 1, MinSpeedLimit = 2, RightTurn = 3, LeftTurn = 4, Stop = 5 };
const char* to_string(Mode m);
const char* to_string(Submode s);
const char* to_string(SignType s);

// Energy rate coefficients in J per (km/h)·s.
struct EnergyCoeffs {
  double a = 2;   // constant speed
  double b = 40;  // braking
  double c = 5;   // turning
  double d = 10;  // accelerating / decelerating
  double for_submode(Submode s) const;
  bool operator==(const EnergyCoeffs&) const = default;
};

// Wheel speed in km/h per (gear, torque) cell.
struct SpeedTable {
  int gears = 9;
  int torques = 11;
  std::vector<double> kmh;  // gears * torques, row-major by gear
  static SpeedTable standard();  // 15 * gear - 5 * torque, clamped to [0, 120]
  double at(int gear, int torque) const;
  bool operator==(const SpeedTable&) const = default;
};

struct Interval {
  double lo = 0, hi = 0;
  bool operator==(const Interval&) const = default;
};

struct PlatoonConfig {
  int n_vehicles = 3;
  double safe_distance = 50;  // m
  double max_gap = 500;       // m
  double comm_loss_prob = 0.5;
  double comm_timeout = 2000;  // ms
  std::array<double, 6> sign_distribution{0.5, 0.1, 0.1, 0.1, 0.1, 0.1};
  EnergyCoeffs energy;
  SpeedTable speed_table = SpeedTable::standard();
  bool turn_location_propagation = true;

  // Driving targets and start layout.
  int cruise_gear = 4, slow_gear = 2, fast_gear = 6;
  double initial_spacing = 60;  // m between consecutive vehicles

  // Timing (ms).
  double dyn_period = 50, dyn_jitter = 10;
  Interval ctrl_idle{20, 40};        // leader pause between control cycles
  Interval ctrl_read{5, 20};         // sensing to reading the lead-vehicle inputs
  Interval ctrl_exec{120, 140};      // sensing to actuation
  Interval follower_fallback{100, 150};  // follower cycle without a fresh message
  Interval com_exec{80, 100};        // sampling to transmission
  Interval sign_interval{600, 1200};
  Interval sign_hold{50, 100};
  Interval reaction{20, 100};        // sign or driver request to effect
  Interval manual_switch{50, 150};   // message timeout to user control
  Interval driver_interval{300, 800};
  double manual_dwell = 3000;        // minimum time in user control
  double stop_dwell = 5000;          // minimum standstill after a stop sign

  // Device power in J/ms while computing / transmitting.
  double controller_power = 0.15;
  double com_power = 0.04;

  // Throws ConfigError.
  void check() const;
  bool operator==(const PlatoonConfig&) const = default;
};

nlohmann::json to_json(const PlatoonConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
PlatoonConfig config_from_json(const nlohmann::json& j);
PlatoonConfig load_config(const std::string& path);

// Named events, predicates and quantities of a built platoon. Requirement
// monitors bind only to these names.
struct TapRegistry {
  std::map<std::string, EventBinding> events;     // binding.tag is left empty
  std::map<std::string, std::string> predicates;  // network predicates
  std::map<std::string, std::string> quantities;  // network expressions
  // Throw ModelError for unknown names.
  EventBinding event(const std::string& name, const std::string& tag) const;
  const std::string& predicate(const std::string& name) const;
  const std::string& quantity(const std::string& name) const;
  // {"events": {name: {channel|predicate, id}}, "predicates": {...}, "quantities": {...}}
  nlohmann::json manifest() const;
};

struct Platoon {
  Network network;
  TapRegistry taps;
  PlatoonConfig config;
};

// Vehicle k (1-based) is made of instances vk_ctrl, vk_dyn, vk_com,
// vk_driver and vk_energy; v1 leads. Throws ConfigError.
Platoon build_platoon(const PlatoonConfig& config);

// Switches the followers between turning at the leader's recorded turn
// location (on) and turning where they notice the direction change (off).
Network enable_refinement(const Network& platoon, bool on);

struct VehicleState {
  double x = 0, y = 0;
  int dx = 1, dy = 0;
  double velocity = 0;  // km/h
  int gear = 0, torque = 0;
  Mode mode = Mode::AutoLeader;
  Submode sub = Submode::ConstSpeed;
  double braking_energy = 0, total_energy = 0;  // J
  bool operator==(const VehicleState&) const = default;
};

// Applies (gear, torque) for dt ms. Out-of-table cells are clamped to the
// nearest cell and reported in `warnings`. Throws std::invalid_argument for
// dt <= 0.
VehicleState vehicle_dynamics_step(const VehicleState& s, int gear, int torque, double dt,
                                   const PlatoonConfig& config, std::vector<std::string>* warnings = nullptr);

// Processes p0..p{n-1} each try once to enter cs. The safe variant tests
// and sets the lock atomically; the unsafe one enters blindly with
// probability 1/2 when it finds the lock taken.
Network mutual_exclusion_fixture(bool safe, int n = 2);
// True while at most one process is in cs.
std::string mutual_exclusion_predicate(int n = 2);

}  // namespace stasmc::cas
