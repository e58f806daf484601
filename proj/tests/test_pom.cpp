#include <gtest/gtest.h>

#include "stasmc/ltl.hpp"
#include "stasmc/pom.hpp"
#include "stasmc/rng.hpp"

using namespace stasmc;
using namespace stasmc::pom;

namespace {

StepTrace trace(std::initializer_list<std::pair<std::string, std::string>> cols) {
  StepTrace t;
  for (const auto& [name, bits] : cols) {
    t.length = static_cast<int>(bits.size());
    for (char c : bits) t.signals[name].push_back(c == '1');
  }
  return t;
}

std::string bits(const StepTrace& t, const std::string& s) {
  std::string out;
  for (double v : t.signals.at(s)) out += v != 0 ? '1' : '0';
  return out;
}

Block blk(Kind k, std::vector<std::string> in, std::string name = "", int n = 0, int m = 0) {
  Block b;
  b.kind = k;
  b.in = std::move(in);
  b.name = std::move(name);
  b.n = n;
  b.m = m;
  return b;
}

BlockNetwork single(Block b, std::vector<std::string> inputs) {
  BlockNetwork n;
  n.inputs = std::move(inputs);
  b.name = "out";
  n.add(b);
  return n;
}

ltl::BoolTrace to_bool(const StepTrace& t) {
  ltl::BoolTrace b;
  for (const auto& [name, v] : t.signals)
    for (double x : v) b[name].push_back(x != 0);
  return b;
}

StepTrace random_trace(RngStream& r, int len, const std::vector<std::string>& names, double p_true = 0.5) {
  StepTrace t;
  t.length = len;
  for (const auto& n : names)
    for (int k = 0; k < len; ++k) t.signals[n].push_back(r.bernoulli(p_true) ? 1 : 0);
  return t;
}

}  // namespace

TEST(Blocks, ImpliesTruthTable) {
  auto r = eval(single(blk(Kind::Implies, {"A", "B"}), {"A", "B"}), trace({{"A", "1100"}, {"B", "1010"}}));
  EXPECT_EQ(bits(r.trace, "out"), "1011");
}

TEST(Blocks, WithinImplies) {
  auto n = single(blk(Kind::WithinImplies, {"In", "Obs"}), {"In", "Obs"});
  EXPECT_EQ(bits(eval(n, trace({{"In", "01100"}, {"Obs", "00100"}})).trace, "out"), "11111");
  EXPECT_EQ(bits(eval(n, trace({{"In", "01100"}, {"Obs", "00000"}})).trace, "out"), "11101");
  // an observation right after the duration does not count
  EXPECT_EQ(bits(eval(n, trace({{"In", "01100"}, {"Obs", "00010"}})).trace, "out"), "11101");
}

TEST(Blocks, WithinImpliesPendingAtEnd) {
  BlockNetwork n = single(blk(Kind::WithinImplies, {"In", "Obs"}), {"In", "Obs"});
  n.add(blk(Kind::Objective, {"out"}, "obj"));
  auto r = eval(n, trace({{"In", "0011"}, {"Obs", "0000"}}));
  ASSERT_EQ(r.objectives.size(), 1u);
  EXPECT_EQ(r.objectives[0].first_fail, -1);
  EXPECT_EQ(r.objectives[0].pending, 1);
}

TEST(Blocks, PulseGenerator) {
  Block p = blk(Kind::Pulse, {}, "", 5, 4);
  p.width = 0.4;
  auto r = eval(single(p, {}), StepTrace{12, {}});
  EXPECT_EQ(bits(r.trace, "out"), "000011000110");
}

TEST(Blocks, ExtenderDelayDetector) {
  EXPECT_EQ(bits(eval(single(blk(Kind::Extender, {"a"}, "", 3), {"a"}), trace({{"a", "01000010"}})).trace, "out"),
            "01110011");
  EXPECT_EQ(bits(eval(single(blk(Kind::Delay, {"a"}, "", 2), {"a"}), trace({{"a", "1101000"}})).trace, "out"),
            "0011010");
  // two consecutive true steps detected; output for the next three steps
  EXPECT_EQ(bits(eval(single(blk(Kind::Detector, {"a"}, "", 2, 3), {"a"}), trace({{"a", "0110000000"}})).trace, "out"),
            "0001110000");
  EXPECT_EQ(bits(eval(single(blk(Kind::Detector, {"a"}, "", 2, 2), {"a"}), trace({{"a", "11110000"}})).trace, "out"),
            "00111100");
}

TEST(Blocks, ExtenderCoversInput) {
  RngStream r(5, 0);
  auto n = single(blk(Kind::Extender, {"a"}, "", 4), {"a"});
  for (int i = 0; i < 200; ++i) {
    auto t = random_trace(r, 1 + static_cast<int>(r.below(40)), {"a"}, 0.2);
    auto res = eval(n, t);
    for (int k = 0; k < t.length; ++k)
      if (t.at("a", k)) EXPECT_TRUE(res.trace.at("out", k));
  }
}

TEST(Blocks, WithinImpliesFalseOncePerDurationAfterItEnds) {
  RngStream r(6, 0);
  auto n = single(blk(Kind::WithinImplies, {"In", "Obs"}), {"In", "Obs"});
  for (int i = 0; i < 300; ++i) {
    auto t = random_trace(r, 2 + static_cast<int>(r.below(40)), {"In", "Obs"}, 0.4);
    auto res = eval(n, t);
    for (int k = 0; k < t.length; ++k) {
      if (res.trace.at("out", k)) continue;
      ASSERT_GT(k, 0);
      EXPECT_TRUE(t.at("In", k - 1));
      EXPECT_FALSE(t.at("In", k));
      int s = k - 1;
      while (s > 0 && t.at("In", s - 1)) --s;
      for (int j = s; j < k; ++j) EXPECT_FALSE(t.at("Obs", j));
    }
  }
}

TEST(Blocks, GotoFromAliases) {
  BlockNetwork n;
  n.inputs = {"a"};
  Block g = blk(Kind::Goto, {"a"});
  g.tag = "T";
  n.add(g);
  Block f = blk(Kind::From, {}, "fa");
  f.tag = "T";
  n.add(f);
  n.add(blk(Kind::Not, {"fa"}, "out"));
  EXPECT_EQ(bits(eval(n, trace({{"a", "0101"}})).trace, "out"), "1010");
  n.blocks.pop_back();
  n.blocks.erase(n.blocks.begin() + 1);
  EXPECT_THROW(Compiled{n}, BlockError);  // goto without from
}

TEST(Blocks, CyclesNeedARegister) {
  BlockNetwork n;
  n.inputs = {"a"};
  n.add(blk(Kind::And, {"a", "y"}, "x"));
  n.add(blk(Kind::Not, {"x"}, "y"));
  EXPECT_THROW(Compiled{n}, BlockError);
  n.blocks[1] = blk(Kind::Delay, {"x"}, "y", 1);
  EXPECT_NO_THROW(Compiled{n});
  n.blocks[1] = blk(Kind::Extender, {"x"}, "y", 2);
  EXPECT_THROW(Compiled{n}, BlockError);
}

TEST(Blocks, UnknownSignalAndArity) {
  EXPECT_THROW(Compiled{single(blk(Kind::Not, {"zz"}), {"a"})}, BlockError);
  EXPECT_THROW(Compiled{single(blk(Kind::Implies, {"a"}), {"a"})}, BlockError);
}

TEST(Blocks, AssumptionFiltersTraces) {
  BlockNetwork n;
  n.inputs = {"a"};
  n.add(blk(Kind::Assumption, {"a"}));
  EXPECT_TRUE(eval(n, trace({{"a", "111"}})).admissible);
  EXPECT_FALSE(eval(n, trace({{"a", "101"}})).admissible);
}

TEST(Blocks, JsonRoundTrip) {
  BlockNetwork n = until_within(4);
  n.blocks.push_back(blk(Kind::Detector, {"p"}, "det", 2, 3));
  EXPECT_EQ(from_json(to_json(n)), n);
  EXPECT_THROW(from_json(nlohmann::json::parse(R"({"blocks": [{"kind": "wobble"}]})")), BlockError);
}

TEST(Patterns, UntilBlockList) {
  BlockNetwork n = until_within(5);
  EXPECT_EQ(n.count(Kind::WithinImplies), 1);
  EXPECT_EQ(n.count(Kind::Extender), 1);
  EXPECT_EQ(n.count(Kind::Implies), 1);
  EXPECT_GE(n.count(Kind::Not), 1);
  EXPECT_GE(n.count(Kind::And), 1);
  EXPECT_EQ(n.count(Kind::Objective), 1);
  EXPECT_THROW(until_within(0), BlockError);
}

TEST(Patterns, ExecutionStepMapping) {
  PatternOptions o;
  o.lower_cut = true;
  BlockNetwork n = constraint_pattern(ConstraintSpec::execution(100, 300), o);
  std::vector<int> ext;
  for (const auto& b : n.blocks)
    if (b.kind == Kind::Extender) ext.push_back(b.n);
  std::sort(ext.begin(), ext.end());
  EXPECT_EQ(ext, (std::vector<int>{10, 30}));
  auto run = [&](int out_step) {
    StepTrace t;
    t.length = 40;
    t.signals["in"].assign(40, 0);
    t.signals["out"].assign(40, 0);
    t.signals["in"][2] = 1;
    t.signals["out"][2 + out_step] = 1;
    return eval(n, t).valid();
  };
  EXPECT_TRUE(run(15));
  EXPECT_TRUE(run(10));
  EXPECT_TRUE(run(30));
  EXPECT_FALSE(run(5));
  EXPECT_FALSE(run(33));
}

TEST(Patterns, EnergyBound) {
  BlockNetwork n = energy_bound(0, 30000);
  EXPECT_EQ(n.count(Kind::Compare), 2);
  StepTrace t;
  t.length = 3;
  t.signals["energy"] = {0, 15000, 30000};
  EXPECT_TRUE(eval(n, t).valid());
  t.signals["energy"][2] = 30001;
  auto r = eval(n, t);
  EXPECT_EQ(r.objectives[0].first_fail, 2);
  EXPECT_THROW(energy_bound(5, 1), BlockError);
}

TEST(Patterns, PeriodicNoncumulativePulse) {
  BlockNetwork n = constraint_pattern(ConstraintSpec::periodic_noncumulative(50, 10));
  ASSERT_EQ(n.count(Kind::Pulse), 1);
  auto p = *std::find_if(n.blocks.begin(), n.blocks.end(), [](const Block& b) { return b.kind == Kind::Pulse; });
  EXPECT_EQ(p.n, 5);
  EXPECT_EQ(p.m, 4);
  EXPECT_DOUBLE_EQ(p.width, 0.4);
  EXPECT_TRUE(eval(n, trace({{"e", "00001000010000"}})).valid());
  EXPECT_FALSE(eval(n, trace({{"e", "00000010000000"}})).valid());
}

TEST(Patterns, SporadicAndCumulative) {
  BlockNetwork s = constraint_pattern(ConstraintSpec::sporadic(30));
  EXPECT_TRUE(eval(s, trace({{"e", "1001001"}})).valid());
  EXPECT_FALSE(eval(s, trace({{"e", "1010000"}})).valid());
  BlockNetwork c = constraint_pattern(ConstraintSpec::periodic_cumulative(50, 10));
  EXPECT_TRUE(eval(c, trace({{"e", "10000100000100000"}})).valid());
  EXPECT_FALSE(eval(c, trace({{"e", "10010000000000000"}})).valid());  // gap of 3 steps
  EXPECT_FALSE(eval(c, trace({{"e", "10000000100000000"}})).valid());  // gap of 8 steps
}

TEST(Patterns, BuildByName) {
  EXPECT_EQ(build_pattern("until_within", {{"t", 3}}), until_within(3));
  EXPECT_NO_THROW(build_pattern("sync", {{"tolerance", 200}, {"members", {"a", "b"}}}));
  EXPECT_THROW(build_pattern("nope", {}), BlockError);
  EXPECT_THROW(build_pattern("execution", {{"lower", 300}, {"upper", 100}}), BlockError);
}

TEST(Verify, ConstantTrueIsValid) {
  BlockNetwork n;
  Block one = blk(Kind::Const, {}, "one");
  one.value = 1;
  n.add(one);
  n.add(blk(Kind::Objective, {"one"}));
  for (int h : {1, 5, 20}) EXPECT_EQ(verify_bounded(n, h, 1 << 20).status, Status::Valid);
}

TEST(Verify, ResponseCounterexample) {
  auto r = verify_bounded(response_within(2), 6, 1 << 12);
  ASSERT_EQ(r.status, Status::Counterexample);
  EXPECT_EQ(bits(r.counterexample, "p"), "100000");
  EXPECT_EQ(bits(r.counterexample, "q"), "000000");
  EXPECT_EQ(r.fail_step, 2);
}

TEST(Verify, AssumptionMakesResponseValid) {
  BlockNetwork n = response_within(2);
  n.add(blk(Kind::Delay, {"p"}, "dp", 1));
  n.add(blk(Kind::Implies, {"q", "dp"}, "q_to_dp"));
  n.add(blk(Kind::Implies, {"dp", "q"}, "dp_to_q"));
  n.add(blk(Kind::Assumption, {n.add(blk(Kind::And, {"q_to_dp", "dp_to_q"}))}));
  EXPECT_EQ(verify_bounded(n, 6, 1 << 12).status, Status::Valid);
}

TEST(Verify, BudgetExceeded) {
  auto r = verify_bounded(response_within(2), 10, 16);  // 20 input bits
  EXPECT_EQ(r.status, Status::BudgetExceeded);
}

TEST(Verify, SameCounterexampleForAnyJobs) {
  BlockNetwork n = until_within(3);
  auto a = verify_bounded(n, 7, 1 << 14, 1), b = verify_bounded(n, 7, 1 << 14, 4);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.counterexample.signals, b.counterexample.signals);
}

TEST(Verify, ValidMeansNoFailureOnAdmissibleTraces) {
  BlockNetwork n = response_within(2);
  n.add(blk(Kind::Delay, {"p"}, "dp", 1));
  n.add(blk(Kind::Implies, {"dp", "q"}, "dp_to_q"));
  n.add(blk(Kind::Assumption, {"dp_to_q"}));
  ASSERT_EQ(verify_bounded(n, 6, 1 << 12).status, Status::Valid);
  RngStream r(8, 0);
  Compiled c(n);
  int admissible = 0;
  for (int i = 0; i < 1000; ++i) {
    auto t = random_trace(r, 6, {"p", "q"});
    auto res = c.eval(t);
    if (!res.admissible) continue;
    ++admissible;
    EXPECT_TRUE(res.valid());
  }
  EXPECT_GT(admissible, 0);
}

TEST(Ltl, Examples) {
  RngStream r(1, 0);
  for (int i = 0; i < 20; ++i) {
    auto t = to_bool(random_trace(r, 4, {"p"}));
    EXPECT_TRUE(ltl::holds(*ltl::parse("G[0,3] true"), t, 4));
  }
  ltl::BoolTrace a{{"q", {false, false, false, true}}}, b{{"q", {false, false, true, false}}};
  EXPECT_FALSE(ltl::holds(*ltl::parse("F[0,2] q"), a, 4));
  EXPECT_TRUE(ltl::holds(*ltl::parse("F[0,2] q"), b, 4));
}

TEST(Ltl, ParseErrors) {
  EXPECT_THROW(ltl::parse("G[3,1] p"), ltl::LtlError);
  EXPECT_THROW(ltl::parse("p &"), ltl::LtlError);
  EXPECT_THROW(ltl::parse("(p"), ltl::LtlError);
  EXPECT_THROW(ltl::holds(*ltl::parse("zz"), {}, 1), ltl::LtlError);
  EXPECT_EQ(ltl::horizon(*ltl::parse("G[0,3] (p -> F[1,2] q)")), 5);
  auto f = ltl::parse("p U[0,4] q -> !r | s & t");
  EXPECT_EQ(ltl::to_string(*ltl::parse(ltl::to_string(*f))), ltl::to_string(*f));
}

TEST(Ltl, UntilDecomposition) {
  RngStream r(2, 0);
  for (int i = 0; i < 10000; ++i) {
    int t = 1 + static_cast<int>(r.below(16));
    int len = t + 1 + static_cast<int>(r.below(64 - t));
    auto tr = to_bool(random_trace(r, len, {"p", "q"}, 0.3 + 0.4 * r.uniform01()));
    auto u = ltl::until(0, t, ltl::atom("p"), ltl::atom("q"));
    auto d = ltl::conjunction(ltl::eventually(0, t, ltl::atom("q")),
                              ltl::always(0, t, ltl::implication(ltl::negation(ltl::atom("q")), ltl::atom("p"))));
    ASSERT_EQ(ltl::holds(*u, tr, len), ltl::holds(*d, tr, len)) << "t=" << t;
  }
}

TEST(PatternsVsLtl, RandomTraces) {
  RngStream r(3, 0);
  for (int i = 0; i < 3000; ++i) {
    int t = 1 + static_cast<int>(r.below(16));
    int len = t + 2 + static_cast<int>(r.below(63 - t));
    auto st = random_trace(r, len, {"p", "q"}, 0.2 + 0.6 * r.uniform01());
    auto bt = to_bool(st);
    auto p = ltl::atom("p"), q = ltl::atom("q");
    ASSERT_EQ(eval(always_within(t), st).valid(), ltl::holds(*ltl::always(0, t, p), bt, len));
    ASSERT_EQ(eval(eventually_within(t), st).valid(), ltl::holds(*ltl::eventually(0, t, p), bt, len));
    ASSERT_EQ(eval(until_within(t), st).valid(), ltl::holds(*ltl::until(0, t, p, q), bt, len));
    auto resp = ltl::always(0, len - 1 - t, ltl::implication(p, ltl::eventually(0, t, q)));
    ASSERT_EQ(eval(response_within(t), st).valid(), ltl::holds(*resp, bt, len));
  }
}
