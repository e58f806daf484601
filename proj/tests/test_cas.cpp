#include <gtest/gtest.h>

#include <set>

#include "stasmc/cas.hpp"
#include "stasmc/catalog.hpp"
#include "stasmc/observers.hpp"
#include "stasmc/sim.hpp"

using namespace stasmc;
using namespace stasmc::cas;

namespace {

PlatoonConfig left_turns(bool propagate) {
  PlatoonConfig c;
  c.sign_distribution = {0.5, 0, 0, 0, 0.5, 0};
  c.turn_location_propagation = propagate;
  return c;
}

long failing_runs(const RequirementSpec& r, const Platoon& p, double bound, long runs) {
  auto b = bind_requirement(r, p, bound);
  Model m(b.network);
  long bad = 0;
  for (long i = 0; i < runs; ++i) bad += !b.property->holds(m, 11, static_cast<std::uint64_t>(i));
  return bad;
}

}  // namespace

TEST(PlatoonConfig, DefaultsPassTheirOwnCheck) {
  PlatoonConfig c;
  EXPECT_NO_THROW(c.check());
  EXPECT_EQ(c.speed_table.at(0, 0), 0);
  EXPECT_EQ(c.speed_table.at(4, 0), 60);
  EXPECT_EQ(c.speed_table.at(8, 0), 120);
  EXPECT_EQ(c.speed_table.at(2, 10), 0);
}

TEST(PlatoonConfig, RejectsBrokenConfigs) {
  auto broken = [](auto edit) {
    PlatoonConfig c;
    edit(c);
    return c;
  };
  EXPECT_THROW(broken([](PlatoonConfig& c) { c.n_vehicles = 1; }).check(), ConfigError);
  EXPECT_THROW(broken([](PlatoonConfig& c) { c.comm_loss_prob = 1.5; }).check(), ConfigError);
  EXPECT_THROW(broken([](PlatoonConfig& c) { c.sign_distribution[0] = 0.9; }).check(), ConfigError);
  EXPECT_THROW(broken([](PlatoonConfig& c) { c.energy.a = 50; }).check(), ConfigError);
  EXPECT_THROW(broken([](PlatoonConfig& c) { c.speed_table.kmh[2 * 11] = 500; }).check(), ConfigError);
  EXPECT_THROW(broken([](PlatoonConfig& c) { c.safe_distance = 0; }).check(), ConfigError);
  EXPECT_THROW(build_platoon(broken([](PlatoonConfig& c) { c.comm_timeout = -1; })), ConfigError);
}

TEST(PlatoonConfig, JsonRoundTripAndUnknownKeys) {
  PlatoonConfig c;
  c.comm_loss_prob = 0.25;
  c.sign_distribution = {0.5, 0, 0, 0, 0.5, 0};
  c.ctrl_exec = {110, 130};
  EXPECT_EQ(config_from_json(to_json(c)), c);
  EXPECT_EQ(config_from_json(nlohmann::json::object()), PlatoonConfig{});
  EXPECT_THROW(config_from_json({{"n_vehicle", 3}}), ConfigError);
  EXPECT_THROW(config_from_json({{"energy_coeffs", {{"e", 1}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"comm_loss_prob", "high"}}), ConfigError);
}

TEST(VehicleDynamics, StandstillChangesNothing) {
  PlatoonConfig c;
  VehicleState s;
  s.x = 5;
  VehicleState n = vehicle_dynamics_step(s, 0, 0, 100, c);
  EXPECT_EQ(n.x, 5);
  EXPECT_EQ(n.y, 0);
  EXPECT_EQ(n.total_energy, 0);
  EXPECT_EQ(n.velocity, 0);
}

TEST(VehicleDynamics, EnergyIsCoefficientTimesSpeedTimesDuration) {
  PlatoonConfig c;
  VehicleState s;
  s.dx = 0;
  s.dy = -1;
  VehicleState n = vehicle_dynamics_step(s, 4, 0, 2000, c);
  EXPECT_DOUBLE_EQ(n.velocity, 60);
  EXPECT_DOUBLE_EQ(n.total_energy, c.energy.a * 60 * 2);
  EXPECT_EQ(n.braking_energy, 0);
  EXPECT_DOUBLE_EQ(n.y, -60 * 2000 / 3600.0);
  s.sub = Submode::Braking;
  n = vehicle_dynamics_step(s, 4, 0, 2000, c);
  EXPECT_DOUBLE_EQ(n.braking_energy, c.energy.b * 60 * 2);
  EXPECT_EQ(n.braking_energy, n.total_energy);
}

TEST(VehicleDynamics, HigherGearIsNeverSlower) {
  PlatoonConfig c;
  for (int q = 0; q < c.speed_table.torques; ++q)
    for (int g = 1; g < c.speed_table.gears; ++g)
      EXPECT_GE(vehicle_dynamics_step({}, g, q, 50, c).velocity, vehicle_dynamics_step({}, g - 1, q, 50, c).velocity);
}

TEST(VehicleDynamics, OutOfTableIsClampedWithWarning) {
  PlatoonConfig c;
  std::vector<std::string> warnings;
  VehicleState n = vehicle_dynamics_step({}, 12, -1, 50, c, &warnings);
  EXPECT_EQ(n.gear, 8);
  EXPECT_EQ(n.torque, 0);
  EXPECT_EQ(n.velocity, 120);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("clamped"), std::string::npos);
  EXPECT_THROW(vehicle_dynamics_step({}, 1, 0, 0, c), std::invalid_argument);
}

TEST(VehicleDynamics, BrakingGrowsEnergyFasterThanCruising) {
  PlatoonConfig c;
  VehicleState cruise, brake;
  brake.sub = Submode::Braking;
  for (int i = 0; i < 100; ++i) {
    cruise = vehicle_dynamics_step(cruise, 4, 0, 50, c);
    brake = vehicle_dynamics_step(brake, 4, 0, 50, c);
  }
  EXPECT_GT(brake.total_energy, cruise.total_energy);
}

TEST(Platoon, DefaultBuildValidatesAndRuns) {
  Platoon p = build_platoon(PlatoonConfig{});
  EXPECT_TRUE(validate(p.network).ok());
  stasmc::Run r = simulate(p.network, 3000, 1);
  EXPECT_FALSE(r.deadlock);
  EXPECT_DOUBLE_EQ(r.end_time, 3000);
  EXPECT_GT(r.events.size(), 100u);
}

TEST(Platoon, BuildsForLongerPlatoons) {
  PlatoonConfig c;
  c.n_vehicles = 5;
  Platoon p = build_platoon(c);
  EXPECT_NE(p.network.find_template("v5_ctrl"), nullptr);
  EXPECT_FALSE(simulate(p.network, 2000, 3).deadlock);
}

TEST(Platoon, TotalLossPutsEveryVehicleInUserControl) {
  PlatoonConfig c;
  c.comm_loss_prob = 1;
  Platoon p = build_platoon(c);
  Model m(p.network);
  std::string all = p.taps.predicate("v1.manual") + " && " + p.taps.predicate("v2.manual") + " && " +
                    p.taps.predicate("v3.manual");
  double bound = c.comm_timeout + c.manual_switch.hi + 1;
  auto r = estimate_probability(m, PathQuery({Shape::Eventually, all, bound}), {}, 5, 1);
  EXPECT_GE(r.lo, 0.95);
  EXPECT_DOUBLE_EQ(r.p_hat, 1);
}

TEST(Platoon, NoLossNeverTriggersCommunicationFailure) {
  PlatoonConfig c;
  c.comm_loss_prob = 0;
  Platoon p = build_platoon(c);
  Model m(p.network);
  PathQuery q({Shape::Always, "!(" + p.taps.predicate("commufail") + ")", 3000});
  for (std::uint64_t i = 0; i < 1000; ++i) ASSERT_TRUE(q.holds(m, 9, i)) << "run " << i;
}

TEST(Platoon, EnergyMetersBehave) {
  Platoon p = build_platoon(PlatoonConfig{});
  Model m(p.network);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimOptions o;
    o.bound = 3000;
    o.seed = seed;
    o.watch = {"v1_energy.total", "v1_energy.braking", "sub[0]"};
    stasmc::Run r = simulate(m, o);
    const auto& total = r.signals[0];
    const auto& braking = r.signals[1];
    const auto& sub = r.signals[2];
    // Value in force just after t: the last sample at or before t.
    auto sub_after = [&](double t) {
      double v = sub.front().second;
      for (const auto& [ts, x] : sub)
        if (ts <= t) v = x;
      return v;
    };
    for (size_t i = 1; i < total.size(); ++i) EXPECT_GE(total[i].second, total[i - 1].second - 1e-9);
    for (size_t i = 1; i < braking.size(); ++i)
      if (braking[i].second > braking[i - 1].second + 1e-9)
        EXPECT_EQ(sub_after(braking[i - 1].first), static_cast<int>(Submode::Braking))
            << "seed " << seed << " t " << braking[i].first;
  }
}

TEST(Platoon, DynamicsTriggerHonorsItsJitter) {
  Platoon p = build_platoon(PlatoonConfig{});
  auto cat = requirement_catalog();
  const auto& r = find_requirement(cat, "R27");
  EXPECT_EQ(failing_runs(r, p, 3000, 20), 0);
}

TEST(Refinement, ToggleRestoresTheFreshBuild) {
  Network on = build_platoon(left_turns(true)).network;
  Network off = build_platoon(left_turns(false)).network;
  EXPECT_FALSE(on == off);
  EXPECT_TRUE(enable_refinement(on, false) == off);
  EXPECT_TRUE(enable_refinement(enable_refinement(on, false), true) == on);
  EXPECT_TRUE(enable_refinement(off, true) == on);
}

TEST(Refinement, FollowersShareTheLaneOnlyWithPropagation) {
  auto cat = requirement_catalog();
  const auto& r = find_requirement(cat, "R23");
  EXPECT_GT(failing_runs(r, build_platoon(left_turns(false)), 8000, 100), 0);
  EXPECT_EQ(failing_runs(r, build_platoon(left_turns(true)), 8000, 100), 0);
}

TEST(Taps, ManifestListsEventsPredicatesAndQuantities) {
  Platoon p = build_platoon(PlatoonConfig{});
  auto j = p.taps.manifest();
  EXPECT_EQ(j["events"]["v1.dyn"]["channel"], "dyn_0");
  EXPECT_EQ(j["events"]["v2.ctrl_out_lead"]["id"], "v2_ctrl.lid");
  EXPECT_EQ(j["predicates"]["sign.stop"], "signType == 5");
  EXPECT_EQ(j["quantities"]["v1.braking_energy"], "v1_energy.braking");
  EXPECT_THROW(p.taps.predicate("v9.auto"), ModelError);
  EXPECT_THROW(p.taps.event("v1.nothing", "t"), ModelError);
  EXPECT_EQ(p.taps.event("v1.dyn", "t").tag, "t");
}

TEST(Taps, BindReplacesNamesAndRejectsUnknownOnes) {
  Platoon p = build_platoon(PlatoonConfig{});
  EXPECT_EQ(bind_taps("{sign.stop} && {v1.velocity} > 0", p.taps), "(signType == 5) && (v[0]) > 0");
  EXPECT_THROW(bind_taps("{v1.flying}", p.taps), ModelError);
  EXPECT_THROW(bind_taps("{v1.auto", p.taps), ModelError);
}

TEST(Catalog, FiftyEntriesInOrder) {
  auto cat = requirement_catalog();
  ASSERT_EQ(cat.size(), 50u);
  std::set<std::string> ids;
  for (size_t i = 0; i < cat.size(); ++i) {
    EXPECT_EQ(cat[i].id, "R" + std::to_string(i + 1));
    EXPECT_FALSE(cat[i].prose.empty());
    ids.insert(cat[i].id);
  }
  EXPECT_EQ(ids.size(), 50u);
  EXPECT_THROW(find_requirement(cat, "R51"), std::out_of_range);
}

TEST(Catalog, SelectedEntriesHaveTheExpectedShape) {
  auto cat = requirement_catalog();
  const auto& r27 = find_requirement(cat, "R27");
  ASSERT_TRUE(r27.constraint);
  EXPECT_EQ(r27.constraint->kind, ConstraintKind::PeriodicNoncumulative);
  EXPECT_EQ(r27.constraint->period, 50);
  EXPECT_EQ(r27.constraint->jitter, 10);
  EXPECT_EQ(r27.bindings.at(0).second, "v1.dyn");

  const auto& r48 = find_requirement(cat, "R48");
  EXPECT_EQ(r48.kind, QueryKind::Expected);
  EXPECT_EQ(r48.extremum, Extremum::Max);
  EXPECT_EQ(r48.quantity, "{v1.braking_energy}");
  EXPECT_EQ(r48.limit, 30000);

  const auto& r47 = find_requirement(cat, "R47");
  EXPECT_EQ(r47.constraint->kind, ConstraintKind::Comparison);
  EXPECT_TRUE(r47.dual);

  EXPECT_FALSE(find_requirement(cat, "R30").scale_note.empty());
  EXPECT_EQ(find_requirement(cat, "R30").constraint->min, 2000);
}

TEST(Catalog, EveryEntryBindsAgainstTheDefaultPlatoon) {
  Platoon p = build_platoon(PlatoonConfig{});
  for (const auto& r : requirement_catalog()) {
    BoundRequirement b;
    ASSERT_NO_THROW(b = bind_requirement(r, p, 100)) << r.id;
    EXPECT_NO_THROW(Model{b.network}) << r.id;
    EXPECT_EQ(b.property == nullptr, r.check == Check::Expected) << r.id;
  }
}

TEST(Catalog, EvaluationReportsCounterexamples) {
  auto cat = requirement_catalog();
  EvalOptions opt;
  opt.jobs = 1;
  opt.bound = 8000;
  auto bad = evaluate_requirement(find_requirement(cat, "R23"), build_platoon(left_turns(false)), opt);
  EXPECT_EQ(bad.status, Status::Violated);
  EXPECT_GE(bad.counterexample, 0);
  auto good = evaluate_requirement(find_requirement(cat, "R23"), build_platoon(left_turns(true)), opt);
  EXPECT_EQ(good.status, Status::Satisfied);
  EXPECT_EQ(good.counterexample, -1);
  auto energy = evaluate_requirement(find_requirement(cat, "R48"), build_platoon(PlatoonConfig{}), {});
  EXPECT_EQ(energy.status, Status::Satisfied);
  EXPECT_LT(energy.result.mean, 30000);
}

TEST(MutualExclusion, SafeVariantHoldsAndUnsafeVariantRaces) {
  std::string mutex = mutual_exclusion_predicate(2);
  HypothesisParams hp;
  hp.p0 = 0.95;
  Model safe(mutual_exclusion_fixture(true));
  Model unsafe(mutual_exclusion_fixture(false));
  PathQuery q({Shape::Always, mutex, 100});
  EXPECT_EQ(hypothesis_test(safe, q, hp, 3, 1).verdict, Verdict::Accepted);
  EXPECT_EQ(hypothesis_test(unsafe, q, hp, 3, 1).verdict, Verdict::Rejected);
  auto est = estimate_probability(unsafe, PathQuery({Shape::Eventually, "!(" + mutex + ")", 100}), {}, 4, 1);
  EXPECT_NEAR(est.p_hat, 0.5, 0.1);
  EXPECT_EQ(mutual_exclusion_predicate(3), "!(p0.cs && p1.cs) && !(p0.cs && p2.cs) && !(p1.cs && p2.cs)");
  EXPECT_THROW(mutual_exclusion_fixture(true, 1), std::invalid_argument);
}
