#include <gtest/gtest.h>

#include <map>

#include "stasmc/expr.hpp"

using namespace stasmc;
using namespace stasmc::expr;

namespace {

// Globals x (int), r (real), b (bool), arr[3] (int); self clock c at rate 2.
struct TestEnv : Env {
  std::vector<double> g{4, 2.5, 1, 10, 20, 30};
  double clk = 1;
  double global(int s) const override { return g[s]; }
  double self_var(int) const override { return 0; }
  double self_clock(int) const override { return clk; }
  double self_clock_rate(int) const override { return 2; }
  double inst_var(int, int) const override { return 0; }
  double inst_clock(int, int) const override { return 0; }
  double inst_clock_rate(int, int) const override { return 1; }
  bool inst_at(int, int) const override { return false; }
  bool inst_label(int, int) const override { return false; }
  bool any_at(int, int) const override { return false; }
  bool any_label(int, int) const override { return false; }
  double time() const override { return 100; }
};

std::optional<Resolved> resolve(const std::string& n) {
  static const std::map<std::string, Resolved> table = {
      {"x", {RefKind::Global, ValueKind::Int, -1, 0}},
      {"r", {RefKind::Global, ValueKind::Real, -1, 1}},
      {"b", {RefKind::Global, ValueKind::Bool, -1, 2}},
      {"arr", {RefKind::GlobalArray, ValueKind::Int, -1, 3, 3}},
      {"c", {RefKind::SelfClock, ValueKind::Real, -1, 0}},
      {"time", {RefKind::Time, ValueKind::Real}},
      {"K", {RefKind::Constant, ValueKind::Int, -1, 0, 0, 7}},
  };
  auto it = table.find(n);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

double ev(const std::string& s, double dt = 0) {
  TestEnv env;
  return compile(s, resolve).eval(env, dt);
}

}  // namespace

TEST(Expr, ArithmeticAndPrecedence) {
  EXPECT_EQ(ev("1 + 2 * 3"), 7);
  EXPECT_EQ(ev("(1 + 2) * 3"), 9);
  EXPECT_EQ(ev("7 / 2"), 3);      // int division truncates
  EXPECT_EQ(ev("-7 / 2"), -3);
  EXPECT_EQ(ev("7.0 / 2"), 3.5);
  EXPECT_EQ(ev("7 % 3"), 1);
  EXPECT_EQ(ev("x * K"), 28);
  EXPECT_EQ(ev("r + 1"), 3.5);
}

TEST(Expr, BooleansAndKeywords) {
  EXPECT_EQ(ev("x > 3 && b"), 1);
  EXPECT_EQ(ev("x > 3 and not b"), 0);
  EXPECT_EQ(ev("false || x == 4"), 1);
  EXPECT_EQ(ev("!(x != 4) or false"), 1);
}

TEST(Expr, ArrayIndexing) {
  EXPECT_EQ(ev("arr[0] + arr[2]"), 40);
  EXPECT_EQ(ev("arr[x - 3]"), 20);
  EXPECT_THROW(ev("arr[3]"), ExprError);
}

TEST(Expr, TypeErrors) {
  EXPECT_THROW(compile("x + b", resolve), ExprError);
  EXPECT_THROW(compile("x && 1", resolve), ExprError);
  EXPECT_THROW(compile("unknown > 1", resolve), ExprError);
  EXPECT_THROW(compile("arr > 1", resolve), ExprError);
  EXPECT_THROW(parse("1 +"), ExprError);
  EXPECT_THROW(parse("(1"), ExprError);
}

TEST(Expr, DivisionByZeroThrows) { EXPECT_THROW(ev("x / (x - 4)"), ExprError); }

TEST(Expr, ClocksAdvanceWithRate) {
  EXPECT_EQ(ev("c"), 1);
  EXPECT_EQ(ev("c", 3), 7);   // 1 + 3 * 2
  EXPECT_EQ(ev("time", 5), 105);
}

TEST(Expr, AffineAnalysis) {
  TestEnv env;
  auto a = compile("2 * c - x", resolve).affine(env);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->first, -2);
  EXPECT_EQ(a->second, 4);
  EXPECT_FALSE(compile("c * c", resolve).affine(env));
}

TEST(Expr, ConjunctsAndComparisonDifference) {
  auto g = compile("c >= 5 && x < 10 && b", resolve);
  auto parts = g.conjuncts();
  ASSERT_EQ(parts.size(), 3u);
  auto d = parts[0].comparison_difference();
  ASSERT_TRUE(d);
  EXPECT_EQ(d->second, Op::Ge);
  TestEnv env;
  EXPECT_EQ(d->first.eval(env), -4);
  EXPECT_FALSE(parts[2].comparison_difference());
  EXPECT_EQ(g.clock_comparisons().size(), 1u);
}

TEST(Expr, EmptyIsTrue) {
  TestEnv env;
  EXPECT_TRUE(Compiled().holds(env));
}

TEST(Expr, Assignments) {
  auto a = parse_assignment("arr[1] = x + 1");
  EXPECT_EQ(a.target, "arr");
  ASSERT_TRUE(a.index);
  EXPECT_THROW(parse_assignment("x + 1"), ExprError);
}

TEST(Expr, Coercion) {
  EXPECT_EQ(coerce(3.7, ValueKind::Int), 3);
  EXPECT_EQ(coerce(-3.7, ValueKind::Int), -3);
  EXPECT_EQ(coerce(5, ValueKind::Bool), 1);
  EXPECT_TRUE(assignable(ValueKind::Real, ValueKind::Int));
  EXPECT_FALSE(assignable(ValueKind::Int, ValueKind::Bool));
}
