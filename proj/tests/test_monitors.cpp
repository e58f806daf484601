#include <gtest/gtest.h>

#include <sstream>

#include "stasmc/monitors.hpp"
#include "streams.hpp"

using namespace stasmc;

namespace {

std::vector<Outcome> outcomes(const std::vector<MonitorVerdict>& v) {
  std::vector<Outcome> o;
  for (const auto& x : v) o.push_back(x.outcome);
  return o;
}

EventStream occ(std::initializer_list<double> times, const std::string& tag = "e") {
  EventStream s;
  for (double t : times) s.push_back({t, tag, 0});
  return s;
}

constexpr Outcome S = Outcome::Success, F = Outcome::Fail, V = Outcome::Vacuous;

}  // namespace

TEST(Execution, Bounds) {
  auto spec = ConstraintSpec::execution(100, 300);
  EXPECT_EQ(outcomes(run_monitor(spec, {{0, "in"}, {150, "out"}})), std::vector<Outcome>{S});
  EXPECT_EQ(outcomes(run_monitor(spec, {{0, "in"}, {350, "out"}})), std::vector<Outcome>{F});
  EXPECT_EQ(outcomes(run_monitor(spec, {{0, "in"}, {100, "out"}})), std::vector<Outcome>{S});
}

TEST(Execution, UnmatchedInIsFail) {
  auto spec = ConstraintSpec::execution(100, 300);
  EXPECT_EQ(outcomes(run_monitor(spec, {{0, "in"}})), std::vector<Outcome>{F});
}

TEST(Execution, IdMatching) {
  auto spec = ConstraintSpec::execution(0, 100);
  EventStream s{{0, "in", 1}, {10, "in", 2}, {50, "out", 2}, {200, "out", 1}};
  EXPECT_EQ(outcomes(run_monitor(spec, s)), (std::vector<Outcome>{F, S}));
}

TEST(EndToEnd, OverlapAndDiscard) {
  auto spec = ConstraintSpec::end_to_end(0, 100, "src", "dst");
  // source 2 overlaps source 1; target 1 is missing so tracker 1 is discarded when target 2 arrives
  EventStream s{{0, "src", 1}, {10, "src", 2}, {60, "dst", 2}, {70, "src", 3}};
  EXPECT_EQ(outcomes(run_monitor(spec, s)), (std::vector<Outcome>{V, S, V}));
}

TEST(Noncumulative, DynamicsTriggerParameters) {
  auto spec = ConstraintSpec::periodic_noncumulative(50, 10);
  EXPECT_EQ(outcomes(run_monitor(spec, occ({45, 95, 152}))), (std::vector<Outcome>{S, S, S}));
  EXPECT_EQ(outcomes(run_monitor(spec, occ({70}))), std::vector<Outcome>{F});
}

TEST(Cumulative, Gaps) {
  auto spec = ConstraintSpec::periodic_cumulative(50, 10);
  EXPECT_EQ(outcomes(run_monitor(spec, occ({0, 45, 105, 170}))), (std::vector<Outcome>{S, S, F}));
}

TEST(Sporadic, MinimumSeparation) {
  auto spec = ConstraintSpec::sporadic(20000);
  EXPECT_EQ(outcomes(run_monitor(spec, occ({0, 25000}))), std::vector<Outcome>{S});
  EXPECT_EQ(outcomes(run_monitor(spec, occ({0, 15000}))), std::vector<Outcome>{F});
  EXPECT_EQ(outcomes(run_monitor(spec, occ({0}))), std::vector<Outcome>{V});
  EXPECT_TRUE(run_monitor(spec, {}).empty());
}

TEST(Synchronization, ToleranceWindow) {
  auto spec = ConstraintSpec::synchronization(200, {"a", "b", "c"});
  EXPECT_EQ(outcomes(run_monitor(spec, {{0, "a"}, {50, "b"}, {180, "c"}})), std::vector<Outcome>{S});
  EXPECT_EQ(outcomes(run_monitor(spec, {{0, "a"}, {50, "b"}, {250, "c"}})), (std::vector<Outcome>{F, V}));
}

TEST(Comparison, SumOfWorstCases) {
  TimingExpr lhs{{TimingTerm::Kind::Wcet, 0, "i", "o"}, {TimingTerm::Kind::Const, 10}};
  TimingExpr rhs{{TimingTerm::Kind::EndToEnd, 0, "s", "t"}};
  auto spec = ConstraintSpec::comparison(lhs, Relation::Ge, rhs);
  EventStream s{{0, "s"}, {0, "i"}, {30, "o"}, {40, "t"}};
  EXPECT_EQ(outcomes(run_monitor(spec, s)), std::vector<Outcome>{S});  // 30 + 10 >= 40
  s[2].time = 29;
  EXPECT_EQ(outcomes(run_monitor(spec, s)), std::vector<Outcome>{F});
  EXPECT_EQ(outcomes(run_monitor(spec, {{0, "s"}})), std::vector<Outcome>{V});
}

TEST(Comparison, SharedTagsAreListedOnce) {
  TimingExpr lhs{{TimingTerm::Kind::Wcet, 0, "i", "o"}};
  TimingExpr rhs{{TimingTerm::Kind::EndToEnd, 0, "i", "t"}};
  EXPECT_EQ(ConstraintSpec::comparison(lhs, Relation::Ge, rhs).tags(), (std::vector<std::string>{"i", "o", "t"}));
}

TEST(Monitor, DecreasingTimestampsRejected) {
  EXPECT_THROW(run_monitor(ConstraintSpec::sporadic(1), occ({5, 4})), std::invalid_argument);
  EXPECT_THROW(oracle_verdicts(ConstraintSpec::sporadic(1), occ({5, 4})), std::invalid_argument);
}

TEST(Monitor, InvalidSpecRejected) {
  EXPECT_THROW(Monitor(ConstraintSpec::execution(5, 1)), std::invalid_argument);
  EXPECT_THROW(Monitor(ConstraintSpec::periodic_cumulative(10, 10)), std::invalid_argument);
}

TEST(WeaklyHard, Windows) {
  std::vector<Outcome> v{S, F, S, S, F};
  EXPECT_EQ(apply_weakly_hard(v, {0, 3}), WhResult::Satisfied);
  EXPECT_EQ(apply_weakly_hard(v, {2, 3}), WhResult::Satisfied);
  EXPECT_EQ(apply_weakly_hard(v, {3, 3}), WhResult::Violated);
  EXPECT_EQ(apply_weakly_hard({F}, {1, 3}), WhResult::Satisfied);  // fewer than k verdicts
}

TEST(WeaklyHard, MEqualsKMeansAllSuccess) {
  RngStream r(3, 0);
  for (int t = 0; t < 500; ++t) {
    std::vector<Outcome> v;
    int n = static_cast<int>(r.below(12));
    for (int i = 0; i < n; ++i) v.push_back(r.below(4) == 0 ? F : S);
    int k = 1 + static_cast<int>(r.below(4));
    if (n < k) continue;
    bool all = std::all_of(v.begin(), v.end(), [](Outcome o) { return o == S; });
    EXPECT_EQ(apply_weakly_hard(v, {k, k}) == WhResult::Satisfied, all);
  }
}

TEST(Oracle, MatchesMonitorOnRandomStreams) {
  RngStream r(17, 0);
  for (auto kind : stasmc::testing::kAllKinds) {
    int succ = 0, fail = 0;
    for (int i = 0; i < 500; ++i) {
      auto c = stasmc::testing::random_case(kind, r);
      auto v = run_monitor(c.spec, c.stream);
      ASSERT_EQ(v, oracle_verdicts(c.spec, c.stream)) << to_string(kind) << " case " << i;
      for (const auto& x : v) {
        succ += x.outcome == S;
        fail += x.outcome == F;
      }
    }
    EXPECT_GT(succ, 0) << to_string(kind);
    EXPECT_GT(fail, 0) << to_string(kind);
  }
}

TEST(Monitor, WideningNeverBreaksSuccess) {
  RngStream r(23, 0);
  for (int i = 0; i < 300; ++i) {
    auto c = stasmc::testing::random_case(ConstraintKind::Execution, r, 60);
    auto wide = c.spec;
    wide.lower = std::max(0.0, wide.lower - 5);
    wide.upper += 5;
    auto a = run_monitor(c.spec, c.stream), b = run_monitor(wide, c.stream);
    ASSERT_EQ(a.size(), b.size());
    for (size_t k = 0; k < a.size(); ++k)
      if (a[k].outcome == S) EXPECT_EQ(b[k].outcome, S);
  }
}

TEST(Offline, CsvRoundTrip) {
  std::istringstream in("time_ms,tag,id\n0,in,1\n150,out,1\n");
  auto s = read_event_stream_csv(in);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].id, 1);
  std::ostringstream os;
  write_verdict_csv(os, run_monitor(ConstraintSpec::execution(100, 300), s));
  EXPECT_EQ(os.str(), "index,time,verdict\n0,0,success\n");
}
