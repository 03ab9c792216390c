// quadstab: run, sweep and check the quadtree overlay simulator.

#include <CLI11.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <thread>

#include "quadstab/acceptance.hpp"
#include "quadstab/runner.hpp"
#include "quadstab/wire.hpp"

namespace {

using namespace quadstab;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitViolation = 3;
constexpr int kExitNonConverged = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "1,2,4..8" -> {1,2,4,5,6,7,8}
std::vector<long long> parse_list(const std::string& text, const char* what) {
  std::vector<long long> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    try {
      const auto dots = item.find("..");
      if (dots == std::string::npos) {
        out.push_back(std::stoll(item));
      } else {
        const long long a = std::stoll(item.substr(0, dots)), b = std::stoll(item.substr(dots + 2));
        if (b < a) throw ConfigError(std::string("empty range in ") + what);
        for (long long v = a; v <= b; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw ConfigError(std::string("bad ") + what + " list '" + text + "'");
    }
  }
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    if (comma > pos) out.push_back(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

struct RunFlags {
  int n = 8;
  int dim = 2;
  int bits = 30;
  std::uint64_t seed = 1;
  std::string placement = "uniform";
  std::string init = "list-random";
  int inflight = 0;
  int delta = 3;
  std::string policy = "random";
  int searches = 2;
  int max_rounds = 0;
  int extra_rounds = 100;
  std::string scenario_file;
  std::string out, dot, trace, snapshot, violations;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--scenario", f.scenario_file, "Scenario JSON file (overrides placement flags)");
  app->add_option("--n", f.n, "Number of nodes")->check(CLI::Range(1, 1 << 16));
  app->add_option("--dim", f.dim, "Dimension")->check(CLI::Range(2, kMaxDim));
  app->add_option("--bits", f.bits, "Fixed-point bits per axis")->check(CLI::Range(2, kMaxBits));
  app->add_option("--seed", f.seed, "Scenario and schedule seed");
  app->add_option("--placement", f.placement, "uniform | min-dist");
  app->add_option("--init", f.init, "list-random | quad-only | line | star | mixed");
  app->add_option("--inflight", f.inflight, "Corrupted initial in-flight messages")->check(CLI::NonNegativeNumber);
  app->add_option("--delta", f.delta, "Rounds a message may stay in flight")->check(CLI::PositiveNumber);
  app->add_option("--policy", f.policy, "random | lifo | oldest-last");
  app->add_option("--searches-per-round", f.searches, "Searches injected per round")->check(CLI::NonNegativeNumber);
  app->add_option("--max-rounds", f.max_rounds, "Round limit (0: 200 n)")->check(CLI::NonNegativeNumber);
  app->add_option("--extra-rounds", f.extra_rounds, "Rounds kept after convergence")->check(CLI::NonNegativeNumber);
}

ScenarioConfig scenario_of(const RunFlags& f) {
  ScenarioConfig sc;
  if (!f.scenario_file.empty()) return scenario_from_json(read_json_file(f.scenario_file));
  sc.n = f.n;
  sc.dim = f.dim;
  sc.bits = f.bits;
  sc.seed = f.seed;
  sc.placement = parse_placement(f.placement);
  sc.init_topology = parse_topology(f.init);
  sc.init_inflight = f.inflight;
  return sc;
}

ScheduleConfig schedule_of(const RunFlags& f, std::uint64_t seed) {
  ScheduleConfig sch;
  sch.seed = seed;
  sch.delta = f.delta;
  sch.policy = parse_policy(f.policy);
  sch.searches_per_round = f.searches;
  sch.max_rounds = f.max_rounds;
  return sch;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

int verdict(const RunReport& r) {
  if (r.total_violations()) return kExitViolation;
  if (!r.converged()) return kExitNonConverged;
  return kExitOk;
}

int cmd_run(const RunFlags& f) {
  const ScenarioConfig sc = scenario_of(f);
  const ScheduleConfig sch = schedule_of(f, sc.seed);
  SystemState initial;
  try {
    initial = generate_scenario(sc);
  } catch (const SimError& e) {
    throw ConfigError(e.what());
  }

  RunOptions ro;
  ro.extra_rounds = f.extra_rounds;
  RunArtifacts art;
  const bool want_art = !f.trace.empty() || !f.dot.empty() || !f.snapshot.empty();
  const RunReport r = run_experiment(std::move(initial), sc, sch, ro, want_art ? &art : nullptr);

  if (!f.out.empty()) open_out(f.out) << report_to_json(r).dump(2) << '\n';
  if (!f.trace.empty()) {
    auto os = open_out(f.trace);
    write_trace(os, art.trace);
  }
  if (!f.dot.empty()) open_out(f.dot) << to_dot(art.final_state);
  if (!f.snapshot.empty()) open_out(f.snapshot) << snapshot_to_json(art.final_state).dump(2) << '\n';
  if (!f.violations.empty()) {
    auto os = open_out(f.violations);
    for (const auto& v : r.violation_samples) os << violation_to_json(v).dump() << '\n';
  }

  std::cout << "n=" << sc.n << " d=" << sc.dim << " seed=" << sc.seed << " init=" << to_string(sc.init_topology)
            << " placement=" << to_string(sc.placement) << " policy=" << to_string(sch.policy) << '\n';
  if (r.converged()) {
    std::cout << "converged in round " << *r.converged_round << " (limit " << r.max_rounds << "), ran "
              << r.rounds_run << " rounds\n";
  } else {
    std::cout << "NON_CONVERGED after " << r.rounds_run << " rounds\n";
  }
  std::cout << "searches " << r.searches_completed << ", max hops " << r.max_hops << '\n';
  std::cout << "violations " << r.total_violations();
  for (std::size_t k = 0; k < kViolationKinds; ++k) {
    if (r.violations[k]) std::cout << ' ' << to_string(static_cast<ViolationKind>(k)) << '=' << r.violations[k];
  }
  std::cout << '\n';
  for (const auto& v : r.violation_samples) {
    std::cout << "  " << to_string(v.kind) << " round " << v.round << ": " << v.details << '\n';
  }
  return verdict(r);
}

struct SweepFlags {
  std::string ns = "8";
  std::string dims = "2";
  std::string seeds = "1..10";
  std::string inits = "list-random";
  std::string policies = "random";
  std::string placement = "uniform";
  int inflight = -1;
  int bits = 30;
  int delta = 3;
  int searches = 2;
  int max_rounds = 0;
  int jobs = 0;
  std::string out;
};

int cmd_sweep(const SweepFlags& f) {
  struct Row {
    ScenarioConfig sc;
    ScheduleConfig sch;
    RunReport r;
    std::string error;
  };
  std::vector<Row> rows;
  const auto ns = parse_list(f.ns, "n");
  const auto dims = parse_list(f.dims, "dim");
  const auto seeds = parse_list(f.seeds, "seed");
  const auto placement = parse_placement(f.placement);
  std::vector<InitTopology> inits;
  for (const auto& s : split_names(f.inits)) inits.push_back(parse_topology(s));
  std::vector<DeliveryPolicy> policies;
  for (const auto& s : split_names(f.policies)) policies.push_back(parse_policy(s));

  for (auto d : dims) {
    for (auto n : ns) {
      for (auto init : inits) {
        for (auto pol : policies) {
          for (auto seed : seeds) {
            Row row;
            row.sc.n = static_cast<int>(n);
            row.sc.dim = static_cast<int>(d);
            row.sc.bits = f.bits;
            row.sc.seed = static_cast<std::uint64_t>(seed);
            row.sc.placement = placement;
            row.sc.init_topology = init;
            row.sc.init_inflight = f.inflight < 0 ? static_cast<int>(n) : f.inflight;
            row.sch.seed = static_cast<std::uint64_t>(seed);
            row.sch.delta = f.delta;
            row.sch.policy = pol;
            row.sch.searches_per_round = f.searches;
            row.sch.max_rounds = f.max_rounds;
            rows.push_back(row);
          }
        }
      }
    }
  }

  unsigned workers = f.jobs > 0 ? static_cast<unsigned>(f.jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, std::max<std::size_t>(rows.size(), 1));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        rows[i].r = run_experiment(rows[i].sc, rows[i].sch);
      } catch (const std::exception& e) {
        rows[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!f.out.empty()) {
    file = open_out(f.out);
    os = &file;
  }
  *os << "dim,n,seed,init,placement,policy,delta,outcome,converged_round,rounds_run,max_hops,searches,violations";
  for (std::size_t k = 0; k < kViolationKinds; ++k) *os << ',' << to_string(static_cast<ViolationKind>(k));
  *os << ",wall_seconds\n";

  int code = kExitOk;
  for (const auto& row : rows) {
    const auto& r = row.r;
    *os << row.sc.dim << ',' << row.sc.n << ',' << row.sc.seed << ',' << to_string(row.sc.init_topology) << ','
        << to_string(row.sc.placement) << ',' << to_string(row.sch.policy) << ',' << row.sch.delta << ',';
    if (!row.error.empty()) {
      *os << "ERROR,,,,,";
    } else {
      *os << (r.converged() ? "CONVERGED" : "NON_CONVERGED") << ','
          << (r.converged() ? std::to_string(*r.converged_round) : "") << ',' << r.rounds_run << ','
          << r.max_hops << ',' << r.searches_completed << ',' << r.total_violations();
    }
    for (std::size_t k = 0; k < kViolationKinds; ++k) *os << ',' << (row.error.empty() ? r.violations[k] : 0);
    *os << ',' << r.wall_seconds << '\n';

    const std::string where = "n=" + std::to_string(row.sc.n) + " d=" + std::to_string(row.sc.dim) +
                              " seed=" + std::to_string(row.sc.seed) + " init=" + to_string(row.sc.init_topology) +
                              " policy=" + to_string(row.sch.policy);
    if (!row.error.empty()) {
      std::cerr << "error in " << where << ": " << row.error << '\n';
      code = kExitConfig;
    } else if (r.total_violations()) {
      std::cerr << "violation in " << where << ": " << to_string(r.violation_samples.front().kind) << " "
                << r.violation_samples.front().details << '\n';
      if (code == kExitOk || code == kExitNonConverged) code = kExitViolation;
    } else if (!r.converged()) {
      std::cerr << "NON_CONVERGED " << where << '\n';
      if (code == kExitOk) code = kExitNonConverged;
    }
  }
  return code;
}

int cmd_check(const AcceptanceOptions& opts) {
  const auto results = run_acceptance(opts);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << format_result(r) << '\n';
    ok = ok && r.pass;
  }
  return ok ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-stabilizing quadtree overlay simulator"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Execute one seeded run with all monitors attached");
  add_run_flags(run, rf);
  run->add_option("--out", rf.out, "Report JSON");
  run->add_option("--dot", rf.dot, "DOT graph of the final explicit edges");
  run->add_option("--trace", rf.trace, "Trace as JSON lines");
  run->add_option("--snapshot", rf.snapshot, "Final SystemState as JSON");
  run->add_option("--violations", rf.violations, "Violations as JSON lines");

  SweepFlags sf;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of configurations, CSV output");
  sweep->add_option("--n", sf.ns, "Node counts, e.g. 2,4,8..16");
  sweep->add_option("--dim", sf.dims, "Dimensions, e.g. 2,3");
  sweep->add_option("--seeds", sf.seeds, "Seeds, e.g. 1..100 (empty: no runs)");
  sweep->add_option("--init", sf.inits, "Comma-separated init topologies");
  sweep->add_option("--policy", sf.policies, "Comma-separated delivery policies");
  sweep->add_option("--placement", sf.placement, "uniform | min-dist");
  sweep->add_option("--inflight", sf.inflight, "Corrupted initial messages (-1: n)");
  sweep->add_option("--bits", sf.bits, "Fixed-point bits per axis")->check(CLI::Range(2, kMaxBits));
  sweep->add_option("--delta", sf.delta, "Rounds a message may stay in flight")->check(CLI::PositiveNumber);
  sweep->add_option("--searches-per-round", sf.searches, "Searches injected per round")->check(CLI::NonNegativeNumber);
  sweep->add_option("--max-rounds", sf.max_rounds, "Round limit (0: 200 n)")->check(CLI::NonNegativeNumber);
  sweep->add_option("--jobs", sf.jobs, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  sweep->add_option("--out", sf.out, "CSV file (default stdout)");

  AcceptanceOptions ao;
  std::string mutation = "none";
  bool verbose = false;
  auto* check = app.add_subcommand("check", "Run the fixed acceptance suite");
  check->add_option("--seeds", ao.seeds, "Seeds per n at d=2")->check(CLI::PositiveNumber);
  check->add_option("--d3-seeds", ao.d3_seeds, "Seeds per n at d=3")->check(CLI::PositiveNumber);
  check->add_option("--hop-seeds", ao.hop_seeds, "Seeds per n for min-dist runs")->check(CLI::PositiveNumber);
  check->add_option("--pairs", ao.order_pairs, "Random pairs per dimension for the order oracle")
      ->check(CLI::PositiveNumber);
  check->add_option("--mutate", mutation, "Negative control: none | closure | flip-y");
  check->add_flag("-v,--verbose", verbose, "Print per-group timings to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(rf);
    if (sweep->parsed()) return cmd_sweep(sf);
    ao.mutation = parse_mutation(mutation);
    if (verbose) ao.progress = &std::cerr;
    return cmd_check(ao);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const WireError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SimError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SpaceError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
