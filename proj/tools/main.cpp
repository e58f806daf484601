// stasmc command line: simulate, query, suite, verify-pom, monitor.
//
// Exit codes: 0 success or all requirements pass, 1 a requirement, monitor
// or block objective fails, 2 usage, model or engine error, 3 the bounded
// verification budget is too small.
//
// Platoon settings come from the defaults, then --config, then flags.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stasmc/catalog.hpp"
#include "stasmc/csv.hpp"
#include "stasmc/model_io.hpp"
#include "stasmc/monitors.hpp"
#include "stasmc/pom.hpp"
#include "stasmc/sim.hpp"
#include "stasmc/smc.hpp"

namespace fs = std::filesystem;
using namespace stasmc;

namespace {

constexpr int kOk = 0, kFail = 1, kError = 2, kBudget = 3;
constexpr const char* kPlatoon = "platoon";

struct PlatoonFlags {
  std::string config;
  std::optional<int> vehicles;
  std::optional<double> loss;
  std::optional<double> timeout;
  std::optional<double> safe_distance;
  std::optional<std::string> propagation;
  std::vector<double> signs;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "platoon config JSON")->check(CLI::ExistingFile);
    app.add_option("--vehicles", vehicles, "number of vehicles");
    app.add_option("--loss", loss, "message loss probability");
    app.add_option("--timeout", timeout, "message timeout before user control (ms)");
    app.add_option("--safe-distance", safe_distance, "safe distance (m)");
    app.add_option("--propagation", propagation, "followers turn at the leader's turn point")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--signs", signs, "six sign weights: straight,max,min,right,left,stop")->delimiter(',')->expected(6);
  }

  cas::PlatoonConfig resolve() const {
    cas::PlatoonConfig c = config.empty() ? cas::PlatoonConfig{} : cas::load_config(config);
    if (vehicles) c.n_vehicles = *vehicles;
    if (loss) c.comm_loss_prob = *loss;
    if (timeout) c.comm_timeout = *timeout;
    if (safe_distance) c.safe_distance = *safe_distance;
    if (propagation) c.turn_location_propagation = *propagation == "on";
    if (!signs.empty()) std::copy(signs.begin(), signs.end(), c.sign_distribution.begin());
    c.check();
    return c;
  }
};

struct LoadedModel {
  Network network;
  std::optional<cas::Platoon> platoon;
  // Resolves {tap} names on the platoon; other models take expressions as is.
  std::string bind(const std::string& text) const { return platoon ? cas::bind_taps(text, platoon->taps) : text; }
};

LoadedModel load_model(const std::string& path, const PlatoonFlags& flags) {
  LoadedModel m;
  if (path == kPlatoon) {
    m.platoon = cas::build_platoon(flags.resolve());
    m.network = m.platoon->network;
  } else {
    m.network = load_network(path);
  }
  return m;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cout << "seed " << s << "\n";
  return s;
}

int resolve_jobs(int jobs) { return jobs > 0 ? jobs : default_jobs(); }

// "[] pred" or "<> pred".
PathProperty parse_path(const std::string& text, double bound, const LoadedModel& m) {
  std::string t = text;
  t.erase(0, t.find_first_not_of(' '));
  PathProperty p;
  p.bound = bound;
  if (t.rfind("[]", 0) == 0) p.shape = Shape::Always;
  else if (t.rfind("<>", 0) == 0) p.shape = Shape::Eventually;
  else throw std::invalid_argument("property must start with [] or <>: " + text);
  p.predicate = m.bind(t.substr(2));
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json json_arg(const std::string& text) {
  if (!text.empty() && (text[0] == '{' || text[0] == '[')) return nlohmann::json::parse(text);
  return nlohmann::json::parse(slurp(text));
}

TimingExpr timing_from_json(const nlohmann::json& j) {
  TimingExpr e;
  for (const auto& t : j) {
    std::string kind = t.at("kind");
    TimingTerm term;
    if (kind == "const") {
      term.value = t.at("value");
    } else {
      term.kind = kind == "wcet" ? TimingTerm::Kind::Wcet
                  : kind == "end_to_end" ? TimingTerm::Kind::EndToEnd
                                         : throw std::invalid_argument("unknown timing term " + kind);
      term.from = t.at("from");
      term.to = t.at("to");
    }
    e.push_back(term);
  }
  return e;
}

ConstraintSpec constraint_from_json(const nlohmann::json& j) {
  std::string kind = j.at("kind");
  ConstraintSpec s;
  if (kind == "execution" || kind == "end_to_end") {
    s = kind == "execution" ? ConstraintSpec::execution(j.at("lower"), j.at("upper"), j.value("in", "in"),
                                                        j.value("out", "out"))
                            : ConstraintSpec::end_to_end(j.at("lower"), j.at("upper"), j.value("source", "source"),
                                                         j.value("target", "target"));
  } else if (kind == "synchronization") {
    s = ConstraintSpec::synchronization(j.at("tolerance"), j.at("members").get<std::vector<std::string>>());
  } else if (kind == "periodic_cumulative" || kind == "periodic_noncumulative") {
    s = kind == "periodic_cumulative"
            ? ConstraintSpec::periodic_cumulative(j.at("period"), j.at("jitter"), j.value("event", "e"))
            : ConstraintSpec::periodic_noncumulative(j.at("period"), j.at("jitter"), j.value("event", "e"));
  } else if (kind == "sporadic") {
    s = ConstraintSpec::sporadic(j.at("min"), j.value("event", "e"));
  } else if (kind == "comparison") {
    s = ConstraintSpec::comparison(timing_from_json(j.at("lhs")), parse_relation(j.at("rel")),
                                   timing_from_json(j.at("rhs")));
  } else {
    throw std::invalid_argument("unknown constraint kind " + kind);
  }
  s.check();
  return s;
}

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

// ---- simulate -------------------------------------------------------------------

struct SimulateCmd {
  std::string model;
  PlatoonFlags flags;
  double bound = 3000;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> watch;
  std::string out = ".";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("simulate", "run one simulation and write event and signal CSVs");
    c->add_option("model", model, "network JSON, or 'platoon'")->required();
    flags.add_to(*c);
    c->add_option("--bound", bound, "time bound (ms)")->check(CLI::NonNegativeNumber);
    c->add_option("--seed", seed, "run seed");
    c->add_option("--watch", watch, "expression to record; {tap} names allowed on the platoon");
    c->add_option("--out", out, "output directory");
    c->callback([this] { run(); });
  }

  int code = kOk;
  void run() {
    LoadedModel m = load_model(model, flags);
    std::vector<std::string> exprs;
    for (const auto& w : watch) exprs.push_back(m.bind(w));
    Model compiled(m.network);
    SimOptions o;
    o.bound = bound;
    o.seed = resolve_seed(seed);
    o.watch = exprs;
    stasmc::Run r = simulate(compiled, o);
    fs::create_directories(out);
    csv::write_file((fs::path(out) / "events.csv").string(),
                    render([&](std::ostream& os) { write_events_csv(os, compiled, r); }));
    for (size_t i = 0; i < r.signals.size(); ++i)
      csv::write_file((fs::path(out) / ("signal_" + std::to_string(i) + ".csv")).string(),
                      render([&](std::ostream& os) { write_trace_csv(os, r.signals[i]); }));
    std::cout << "events " << r.events.size() << " end_time " << csv::num(r.end_time)
              << (r.deadlock ? " deadlock" : "") << "\n";
    for (size_t i = 0; i < watch.size(); ++i) std::cout << "signal_" << i << ".csv " << watch[i] << "\n";
  }
};

// ---- query ----------------------------------------------------------------------

struct QueryCmd {
  std::string model;
  PlatoonFlags flags;
  std::string kind = "estimate";
  std::string property;
  std::string expr;
  std::string extremum = "max";
  std::string cmp = "ge";
  double bound = 3000;
  double epsilon = 0.05, alpha = 0.05, beta = 0.05, p0 = 0.95, delta = 0.01;
  long runs = 100, cap = 10000;
  bool dual = false;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string out, histogram;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("query", "estimate, test or expected-value query");
    c->add_option("model", model, "network JSON, or 'platoon'")->required();
    flags.add_to(*c);
    c->add_option("--kind", kind)->check(CLI::IsMember({"estimate", "test", "expected"}));
    c->add_option("--property", property, "'[] pred' or '<> pred'");
    c->add_option("--expr", expr, "expression for expected-value queries");
    c->add_option("--extremum", extremum)->check(CLI::IsMember({"max", "min"}));
    c->add_option("--bound", bound, "time bound (ms)")->check(CLI::NonNegativeNumber);
    c->add_option("--epsilon", epsilon);
    c->add_option("--alpha", alpha);
    c->add_option("--beta", beta);
    c->add_option("--p0", p0, "probability threshold for tests");
    c->add_option("--cmp", cmp, "ge: Pr >= p0, le: Pr <= p0")->check(CLI::IsMember({"ge", "le"}));
    c->add_option("--delta", delta, "indifference half-width");
    c->add_option("--cap", cap, "maximum runs for tests");
    c->add_flag("--dual", dual, "test the dual query instead");
    c->add_option("--runs", runs, "runs for expected-value queries");
    c->add_option("--seed", seed);
    c->add_option("--jobs", jobs, "worker threads (default: STASMC_JOBS or all cores)");
    c->add_option("--out", out, "result CSV");
    c->add_option("--histogram", histogram, "per-run values CSV for expected-value queries");
    c->callback([this] { run(); });
  }

  void run() {
    LoadedModel m = load_model(model, flags);
    Model compiled(m.network);
    std::uint64_t s = resolve_seed(seed);
    int j = resolve_jobs(jobs);
    QueryResult r;
    std::string id;
    if (kind == "expected") {
      if (expr.empty()) throw std::invalid_argument("--expr is required for expected-value queries");
      r = expected_value(compiled, bound, runs, extremum == "max" ? Extremum::Max : Extremum::Min, m.bind(expr), s,
                         j);
      id = "E_" + extremum;
      std::cout << "expected " << extremum << " mean " << csv::num(r.mean) << " +- " << csv::num(r.half_width)
                << " runs " << r.runs_used << "\n";
    } else {
      if (property.empty()) throw std::invalid_argument("--property is required");
      PathProperty p = parse_path(property, bound, m);
      if (kind == "estimate") {
        r = estimate_probability(compiled, PathQuery(p), {epsilon, alpha}, s, j);
        id = "Pr";
        std::cout << "estimate [" << csv::num(r.lo) << ", " << csv::num(r.hi) << "] p_hat " << csv::num(r.p_hat)
                  << " runs " << r.runs_used << "\n";
      } else {
        HypothesisQuery q{p, cmp == "ge" ? Comparison::AtLeast : Comparison::AtMost, p0};
        if (dual) q = dualize(q);
        HypothesisParams hp;
        hp.delta = delta;
        hp.alpha = alpha;
        hp.beta = beta;
        hp.cap = cap;
        r = run_hypothesis(compiled, q, hp, s, j);
        id = "Pr_test";
        std::cout << "test " << (q.property.shape == Shape::Always ? "[]" : "<>") << " "
                  << (q.cmp == Comparison::AtLeast ? ">= " : "<= ") << csv::num(q.p) << " " << to_string(r.verdict)
                  << " runs " << r.runs_used << "\n";
      }
    }
    if (!out.empty())
      csv::write_file(out, render([&](std::ostream& os) {
                        write_result_header(os);
                        write_result_row(os, id, r);
                      }));
    if (!histogram.empty() && kind == "expected")
      csv::write_file(histogram, render([&](std::ostream& os) { write_histogram_csv(os, r.values); }));
  }
};

// ---- suite ----------------------------------------------------------------------

struct SuiteCmd {
  PlatoonFlags flags;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> only;
  std::optional<double> bound;
  int jobs = 0;
  std::string out, cex_dir;
  int code = kOk;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("suite", "evaluate the R1-R50 requirement catalog on the platoon");
    flags.add_to(*c);
    c->add_option("--seed", seed);
    c->add_option("--only", only, "comma-separated requirement ids")->delimiter(',');
    c->add_option("--bound", bound, "override every entry's run bound (ms)");
    c->add_option("--jobs", jobs, "worker threads (default: STASMC_JOBS or all cores)");
    c->add_option("--out", out, "report CSV");
    c->add_option("--cex-dir", cex_dir, "write the events of each counterexample run here");
    c->callback([this] { run(); });
  }

  void run() {
    cas::PlatoonConfig config = flags.resolve();
    cas::EvalOptions opt;
    opt.seed = resolve_seed(seed);
    opt.jobs = resolve_jobs(jobs);
    opt.bound = bound;
    cas::SuiteReport rep = cas::run_suite(config, only, opt);
    std::cout << "config " << rep.config_hash << " seed " << rep.seed << " engine " << rep.engine_version << "\n";
    for (size_t i = 0; i < rep.results.size(); ++i) {
      const auto& r = rep.results[i];
      std::printf("%-4s %-12s runs %-6ld %9.1f ms  %s%s\n", r.id.c_str(), cas::to_string(r.status),
                  r.result.runs_used, rep.wall_ms[i], r.query.c_str(),
                  r.counterexample >= 0 ? (" [counterexample run " + std::to_string(r.counterexample) + "]").c_str()
                                        : "");
    }
    std::fflush(stdout);
    if (!out.empty()) csv::write_file(out, render([&](std::ostream& os) { cas::write_suite_csv(os, rep); }));
    if (!cex_dir.empty()) write_counterexamples(config, rep, opt);
    code = rep.any_violated() ? kFail : kOk;
  }

  void write_counterexamples(const cas::PlatoonConfig& config, const cas::SuiteReport& rep,
                             const cas::EvalOptions& opt) const {
    cas::Platoon p = cas::build_platoon(config);
    auto catalog = cas::requirement_catalog();
    fs::create_directories(cex_dir);
    for (const auto& r : rep.results) {
      if (r.counterexample < 0) continue;
      const auto& spec = cas::find_requirement(catalog, r.id);
      double b = opt.bound.value_or(spec.bound);
      auto bound_req = cas::bind_requirement(spec, p, b);
      Model m(bound_req.network);
      SimOptions so;
      so.bound = b;
      so.seed = opt.seed;
      so.stream = static_cast<std::uint64_t>(r.counterexample);
      stasmc::Run run = simulate(m, so);
      std::string path = (fs::path(cex_dir) / (r.id + "_run" + std::to_string(r.counterexample) + ".csv")).string();
      csv::write_file(path, render([&](std::ostream& os) { write_events_csv(os, m, run); }));
      std::cout << "counterexample " << r.id << " -> " << path << "\n";
    }
  }
};

// ---- verify-pom -----------------------------------------------------------------

struct VerifyCmd {
  std::string block;
  std::string pattern;
  std::string params = "{}";
  int horizon = 8;
  std::uint64_t budget = 1u << 20;
  int jobs = 0;
  std::string out = "counterexample.csv";
  double step_ms = 10;
  int code = kOk;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("verify-pom", "exhaustive bounded check of a block network");
    c->add_option("block", block, "block network JSON");
    c->add_option("--pattern", pattern, "build a named pattern instead of loading a file");
    c->add_option("--params", params, "pattern parameters as JSON");
    c->add_option("--horizon", horizon, "steps")->check(CLI::PositiveNumber);
    c->add_option("--budget", budget, "maximum input traces");
    c->add_option("--jobs", jobs);
    c->add_option("--out", out, "counterexample CSV");
    c->add_option("--step-ms", step_ms, "time per step in the CSV");
    c->callback([this] { run(); });
  }

  void run() {
    if (block.empty() == pattern.empty()) throw std::invalid_argument("give a block file or --pattern, not both");
    pom::BlockNetwork n = pattern.empty() ? pom::load(block) : pom::build_pattern(pattern, nlohmann::json::parse(params));
    pom::VerifyResult r = pom::verify_bounded(n, horizon, budget, resolve_jobs(jobs));
    switch (r.status) {
      case pom::Status::Valid:
        std::cout << "valid (" << r.traces_checked << " traces)\n";
        code = kOk;
        break;
      case pom::Status::Counterexample: {
        pom::EvalResult e = pom::eval(n, r.counterexample);
        csv::write_file(out, render([&](std::ostream& os) { pom::write_trace_csv(os, e.trace, step_ms); }));
        std::cout << "counterexample: " << r.objective << " fails at step " << r.fail_step << " -> " << out << "\n";
        code = kFail;
        break;
      }
      case pom::Status::BudgetExceeded:
        std::cout << "budget_exceeded\n";
        code = kBudget;
        break;
    }
  }
};

// ---- monitor --------------------------------------------------------------------

struct MonitorCmd {
  std::string spec;
  std::string events;
  std::string out;
  std::optional<double> end_time;
  std::vector<int> weakly_hard;
  int code = kOk;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("monitor", "check a timing constraint over an event CSV");
    c->add_option("--spec", spec, "constraint JSON (inline or file)")->required();
    c->add_option("--events", events, "CSV with time_ms,tag,id")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out, "verdict CSV");
    c->add_option("--end", end_time, "stream end time (ms)");
    c->add_option("--weakly-hard", weakly_hard, "m,k: at most m misses in any k verdicts")
        ->delimiter(',')
        ->expected(2);
    c->callback([this] { run(); });
  }

  void run() {
    ConstraintSpec s = constraint_from_json(json_arg(spec));
    std::ifstream in(events);
    EventStream stream = read_event_stream_csv(in);
    auto verdicts = run_monitor(s, stream, end_time.value_or(kStreamEnd));
    if (!out.empty()) csv::write_file(out, render([&](std::ostream& os) { write_verdict_csv(os, verdicts); }));
    long fails = 0, vacuous = 0;
    for (const auto& v : verdicts) {
      fails += v.outcome == Outcome::Fail;
      vacuous += v.outcome == Outcome::Vacuous;
    }
    std::cout << to_string(s.kind) << ": " << verdicts.size() << " verdicts, " << fails << " fail, " << vacuous
              << " vacuous\n";
    bool ok = fails == 0;
    if (!weakly_hard.empty()) {
      ok = apply_weakly_hard(non_vacuous(verdicts), {weakly_hard[0], weakly_hard[1]}) == WhResult::Satisfied;
      std::cout << "weakly-hard (" << weakly_hard[0] << "," << weakly_hard[1] << "): "
                << (ok ? "satisfied" : "violated") << "\n";
    }
    code = ok ? kOk : kFail;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical model checking of stochastic timed automata"};
  app.require_subcommand(1);
  SimulateCmd simulate_cmd;
  QueryCmd query_cmd;
  SuiteCmd suite_cmd;
  VerifyCmd verify_cmd;
  MonitorCmd monitor_cmd;
  simulate_cmd.add(app);
  query_cmd.add(app);
  suite_cmd.add(app);
  verify_cmd.add(app);
  monitor_cmd.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  if (app.got_subcommand("suite")) return suite_cmd.code;
  if (app.got_subcommand("verify-pom")) return verify_cmd.code;
  if (app.got_subcommand("monitor")) return monitor_cmd.code;
  return kOk;
}
