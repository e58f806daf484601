// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. The CLI path for the determinism check
// comes from STASMC_CLI (compile definition, overridable by argv[1]).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "fixtures.hpp"
#include "streams.hpp"
#include "stasmc/catalog.hpp"
#include "stasmc/ltl.hpp"
#include "stasmc/observers.hpp"
#include "stasmc/pom.hpp"
#include "stasmc/sim.hpp"
#include "stasmc/smc.hpp"

using namespace stasmc;
namespace fs = std::filesystem;

namespace {

struct Report {
  bool pass = false;
  std::string detail;
};

std::string g_cli = STASMC_CLI;
fs::path g_work;

// ---- 1: monitors against the brute-force evaluator -------------------------------

Report monitor_oracle() {
  long cases = 0, mismatches = 0;
  std::string first;
  for (ConstraintKind kind : testing::kAllKinds) {
    RngStream rng(101, static_cast<std::uint64_t>(kind));
    for (int i = 0; i < 10000; ++i) {
      testing::MonitorCase c = testing::random_case(kind, rng, 200);
      ++cases;
      if (run_monitor(c.spec, c.stream) != oracle_verdicts(c.spec, c.stream)) {
        if (mismatches++ == 0) first = fmt::format(" first mismatch: {} case {}", to_string(kind), i);
      }
    }
  }
  return {mismatches == 0, fmt::format("{} cases over 7 kinds, {} mismatches{}", cases, mismatches, first)};
}

// ---- 2: Chernoff interval coverage ------------------------------------------------

Report estimator_calibration() {
  bool ok = true;
  std::string detail;
  long n = chernoff_runs(0.05, 0.05);
  ok = ok && n == 738;
  detail = fmt::format("N={};", n);
  for (double p : {0.1, 0.3, 0.5, 0.9}) {
    Model m(testing::bernoulli(p, 1 - p));
    PathQuery q({Shape::Eventually, "B.A", 1});
    int covered = 0;
    for (int t = 0; t < 200; ++t) {
      QueryResult r = estimate_probability(m, q, {0.05, 0.05}, 2000 + t, 0);
      covered += r.lo <= p && p <= r.hi;
    }
    ok = ok && covered >= 186;  // 93% of 200
    detail += fmt::format(" p={} covered {}/200;", p, covered);
  }
  return {ok, detail};
}

// ---- 3: SPRT error rates ---------------------------------------------------------

Report sprt_rates() {
  HypothesisParams hp;
  hp.p0 = 0.5;
  hp.delta = 0.05;
  hp.alpha = 0.05;
  hp.beta = 0.05;
  auto count = [&](double p, Verdict want) {
    Model m(testing::bernoulli(p, 1 - p));
    PathQuery q({Shape::Eventually, "B.A", 1});
    int hits = 0;
    for (int t = 0; t < 200; ++t) hits += hypothesis_test(m, q, hp, 5000 + t, 0).verdict == want;
    return hits;
  };
  int rejected = count(0.2, Verdict::Rejected);
  int accepted = count(0.8, Verdict::Accepted);
  return {rejected >= 190 && accepted >= 190,
          fmt::format("p=0.2 rejected {}/200, p=0.8 accepted {}/200", rejected, accepted)};
}

// ---- 4: block patterns against the LTL evaluator -----------------------------------

ltl::BoolTrace to_bool(const pom::StepTrace& t) {
  ltl::BoolTrace b;
  for (const auto& [name, v] : t.signals)
    for (double x : v) b[name].push_back(x != 0);
  return b;
}

pom::StepTrace random_pq(RngStream& r, int len) {
  double density = 0.2 + 0.6 * r.uniform01();
  pom::StepTrace st;
  st.length = len;
  for (const char* s : {"p", "q"})
    for (int k = 0; k < len; ++k) st.signals[s].push_back(r.bernoulli(density) ? 1 : 0);
  return st;
}

struct PatternPair {
  const char* name;
  pom::BlockNetwork net;
  ltl::FormulaPtr f;
};

std::vector<PatternPair> anchored_patterns(int t) {
  auto p = ltl::atom("p"), q = ltl::atom("q");
  return {{"always_within", pom::always_within(t), ltl::always(0, t, p)},
          {"eventually_within", pom::eventually_within(t), ltl::eventually(0, t, p)},
          {"until_within", pom::until_within(t), ltl::until(0, t, p, q)}};
}

bool pending(const pom::EvalResult& e) {
  return std::any_of(e.objectives.begin(), e.objectives.end(), [](const auto& o) { return o.pending > 0; });
}

// Exact agreement on traces of length >= t + 2, where the WithinImplies
// verdict step for the window 0..t exists. At length t + 1 the block verdict
// may only be pending; any disagreement there must be exactly that.
Report block_ltl() {
  RngStream r(404, 0);
  long cases = 0, mismatches = 0, identity_breaks = 0, edge_cases = 0, edge_pending = 0, edge_wrong = 0;
  std::string first;
  auto p = ltl::atom("p"), q = ltl::atom("q");
  for (int i = 0; i < 10000; ++i) {
    int t = 1 + static_cast<int>(r.below(16));
    int len = t + 2 + static_cast<int>(r.below(63 - t));
    pom::StepTrace st = random_pq(r, len);
    auto bt = to_bool(st);
    for (auto& pr : anchored_patterns(t)) {
      ++cases;
      if (pom::eval(pr.net, st).valid() != ltl::holds(*pr.f, bt, len) && mismatches++ == 0)
        first = fmt::format(" first mismatch: {} t={} len={}", pr.name, t, len);
    }
    auto decomposed = ltl::conjunction(ltl::eventually(0, t, q), ltl::always(0, t, ltl::implication(ltl::negation(q), p)));
    identity_breaks += ltl::holds(*ltl::until(0, t, p, q), bt, len) != ltl::holds(*decomposed, bt, len);
  }
  for (int i = 0; i < 2000; ++i) {
    int t = 1 + static_cast<int>(r.below(16));
    pom::StepTrace st = random_pq(r, t + 1);
    auto bt = to_bool(st);
    for (auto& pr : anchored_patterns(t)) {
      ++edge_cases;
      pom::EvalResult e = pom::eval(pr.net, st);
      bool oracle = ltl::holds(*pr.f, bt, t + 1);
      if (e.valid() == oracle) continue;
      if (!oracle && e.valid() && pending(e)) ++edge_pending;
      else ++edge_wrong;
    }
  }
  return {mismatches == 0 && identity_breaks == 0 && edge_wrong == 0,
          fmt::format("{} pattern cases, {} mismatches, {} until-identity breaks{}; length t+1: {} cases, "
                      "{} pending at trace end, {} wrong",
                      cases, mismatches, identity_breaks, first, edge_cases, edge_pending, edge_wrong)};
}

// ---- 5: query and dual agree ------------------------------------------------------

Report duality() {
  std::string mutex = cas::mutual_exclusion_predicate(2);
  HypothesisParams hp;
  bool ok = true;
  int cells = 0;
  std::string rows;
  for (bool safe : {true, false}) {
    Model m(cas::mutual_exclusion_fixture(safe, 2));
    rows += safe ? " safe:" : " unsafe:";
    for (int k = 0; k < 10; ++k) {
      double p = 0.05 + 0.1 * k;
      HypothesisQuery q{{Shape::Always, mutex, 100}, Comparison::AtLeast, p};
      Verdict a = run_hypothesis(m, q, hp, 77 + k, 0).verdict;
      Verdict b = run_hypothesis(m, dualize(q), hp, 77 + k, 0).verdict;
      ++cells;
      ok = ok && a == b;
      if (safe) ok = ok && a == Verdict::Accepted;
      rows += a == b ? " =" : " X";
    }
  }
  return {ok, fmt::format("{} paired cells;{}", cells, rows)};
}

// ---- 6: left-turn counterexample and the shared turn location fix -------------------

cas::PlatoonConfig left_turn_config(bool propagation) {
  cas::PlatoonConfig c;
  c.sign_distribution = {0.5, 0, 0, 0, 0.5, 0};
  c.turn_location_propagation = propagation;
  return c;
}

struct FailScan {
  long fails = 0;
  long first = -1;
};

FailScan scan(const Model& m, const Property& prop, std::uint64_t seed, long n) {
  std::vector<char> bad(static_cast<std::size_t>(n), 0);
  parallel_for_index(0, n, 0, [&](long i) { bad[i] = !prop.holds(m, seed, static_cast<std::uint64_t>(i)); });
  FailScan s;
  for (long i = 0; i < n; ++i) {
    if (!bad[i]) continue;
    if (s.first < 0) s.first = i;
    ++s.fails;
  }
  return s;
}

Report cas_regression() {
  constexpr double kBound = 8000;
  constexpr std::uint64_t kSeed = 606;
  auto catalog = cas::requirement_catalog();
  const auto& r23 = cas::find_requirement(catalog, "R23");

  cas::Platoon off = cas::build_platoon(left_turn_config(false));
  auto bound_off = cas::bind_requirement(r23, off, kBound);
  Model m_off(bound_off.network);
  FailScan s_off = scan(m_off, *bound_off.property, kSeed, 1000);

  std::string exported = "none";
  if (s_off.first >= 0) {
    SimOptions o;
    o.bound = kBound;
    o.seed = kSeed;
    o.stream = static_cast<std::uint64_t>(s_off.first);
    stasmc::Run run = simulate(m_off, o);
    fs::path out = g_work / fmt::format("R23_counterexample_run{}.csv", s_off.first);
    std::ofstream os(out);
    write_events_csv(os, m_off, run);
    exported = out.string();
  }

  cas::Platoon on = cas::build_platoon(left_turn_config(true));
  auto bound_on = cas::bind_requirement(r23, on, kBound);
  Model m_on(bound_on.network);
  FailScan s_on = scan(m_on, *bound_on.property, kSeed, 1000);

  HypothesisParams hp;
  hp.p0 = 0.95;
  hp.delta = 0.02;
  hp.cap = 3000;
  QueryResult test = hypothesis_test(m_on, *bound_on.property, hp, kSeed, 0);

  bool ok = s_off.fails >= 1 && fs::exists(exported) && s_on.fails == 0 && test.verdict == Verdict::Accepted;
  return {ok, fmt::format("flag off: {}/1000 fail, counterexample {}; flag on: {}/1000 fail; "
                          "Pr[{}]([] !R23.fail) >= 0.95 {} after {} runs",
                          s_off.fails, exported, s_on.fails, kBound, to_string(test.verdict), test.runs_used)};
}

// ---- 7: periodic trigger --------------------------------------------------------

Report periodic_trigger() {
  auto catalog = cas::requirement_catalog();
  cas::Platoon p = cas::build_platoon({});
  long fails = 0;
  for (const char* id : {"R27", "R28", "R29"}) {
    auto b = cas::bind_requirement(cas::find_requirement(catalog, id), p, 3000);
    Model m(b.network);
    fails += scan(m, *b.property, 707, 100).fails;
  }
  return {fails == 0, fmt::format("periodic_noncumulative(50, 10) on v1..v3 dyn, 300 runs of 3000 ms, {} fail", fails)};
}

// ---- 8: braking energy ----------------------------------------------------------

Report energy() {
  auto catalog = cas::requirement_catalog();
  const auto& r48 = cas::find_requirement(catalog, "R48");
  auto mean = [&](const cas::PlatoonConfig& c, std::uint64_t seed) {
    cas::Platoon p = cas::build_platoon(c);
    auto b = cas::bind_requirement(r48, p, 3000);
    Model m(b.network);
    return expected_value(m, 3000, 100, Extremum::Max, b.expr, seed, 0).mean;
  };
  cas::PlatoonConfig base;
  cas::PlatoonConfig doubled;
  doubled.energy.b *= 2;
  double m0 = mean(base, 808);
  bool ok = m0 < 30000;
  std::string detail = fmt::format("mean {:.1f} J (limit 30000); doubled b:", m0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double a = mean(base, seed), b = mean(doubled, seed);
    ok = ok && b > a;
    detail += fmt::format(" {:.1f}->{:.1f}", a, b);
  }
  return {ok, detail};
}

// ---- 9: suite report determinism -------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Report determinism() {
  auto run = [&](const std::string& name, int jobs) {
    fs::path out = g_work / name;
    std::string cmd = fmt::format("\"{}\" suite --seed 909 --jobs {} --out \"{}\" > \"{}.log\" 2>&1", g_cli, jobs,
                                  out.string(), out.string());
    int rc = std::system(cmd.c_str());
    return std::pair{rc, slurp(out)};
  };
  auto [rc1, a] = run("suite_a.csv", 1);
  auto [rc2, b] = run("suite_b.csv", 1);
  auto [rc3, c] = run("suite_jobs8.csv", 8);
  long rows = std::count(a.begin(), a.end(), '\n') - 1;
  bool ok = !a.empty() && a == b && a == c && rows == 50;
  return {ok, fmt::format("{} rows; repeat {}; jobs 1 vs 8 {}; exit codes {},{},{}", rows,
                          a == b ? "identical" : "DIFFER", a == c ? "identical" : "DIFFER", rc1, rc2, rc3)};
}

// ---- 10: observers do not change the model's behavior ------------------------------

Report non_interference() {
  auto catalog = cas::requirement_catalog();
  cas::Platoon p = cas::build_platoon({});
  Model plain(p.network);
  std::vector<std::string> ids{"R1", "R4", "R15", "R23", "R27", "R30", "R33", "R36", "R39", "R44", "R47"};
  std::atomic<long> differing{0};
  for (const auto& id : ids) {
    auto b = cas::bind_requirement(cas::find_requirement(catalog, id), p, 3000);
    Model watched(b.network);
    parallel_for_index(0, 100, 0, [&](long seed) {
      SimOptions o;
      o.bound = 3000;
      o.seed = static_cast<std::uint64_t>(seed);
      if (model_events(simulate(plain, o).events) != model_events(simulate(watched, o).events)) ++differing;
    });
  }
  return {differing == 0, fmt::format("{} observer sets x 100 seeds, {} differing event lists", ids.size(),
                                      differing.load())};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  g_work = fs::temp_directory_path() / "stasmc_acceptance";
  fs::create_directories(g_work);

  struct Criterion {
    int number;
    const char* name;
    std::function<Report()> run;
  };
  const Criterion criteria[] = {
      {1, "monitor verdicts match the brute-force evaluator", monitor_oracle},
      {2, "Chernoff interval coverage", estimator_calibration},
      {3, "SPRT error rates", sprt_rates},
      {4, "block patterns match bounded LTL", block_ltl},
      {5, "hypothesis query and its dual agree", duality},
      {6, "left-turn counterexample and shared turn location fix", cas_regression},
      {7, "periodic dynamics trigger honors its jitter window", periodic_trigger},
      {8, "braking energy bound and coefficient sensitivity", energy},
      {9, "suite report is deterministic", determinism},
      {10, "observers do not interfere", non_interference},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Report o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.number, c.name, o.detail.c_str(), s);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
