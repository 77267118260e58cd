// eqvi: command-line front end for instance generation, solving, experiments,
// sample-complexity bounds and coupling reports.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eqvi/bench.hpp"
#include "eqvi/complexity.hpp"
#include "eqvi/coupling.hpp"
#include "eqvi/dp.hpp"
#include "eqvi/error.hpp"
#include "eqvi/mdp.hpp"
#include "eqvi/solvers.hpp"

namespace {

using namespace eqvi;

std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  const unsigned long long value = std::stoull(text, &used, 0);
  if (used != text.size()) throw DomainError("bad seed: " + text);
  return value;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_text_file(out, text);
}

struct InstanceOptions {
  std::size_t states = 100;
  std::size_t actions = 5;
  double gamma = 0.9;
  std::string instance_seed = "1";
  std::string mdp_path;

  void add(CLI::App* app, bool with_file = true) {
    app->add_option("--states", states, "Number of states")->check(CLI::PositiveNumber);
    app->add_option("--actions", actions, "Number of actions")->check(CLI::PositiveNumber);
    app->add_option("--gamma", gamma, "Discount factor in (0,1)");
    app->add_option("--instance-seed", instance_seed, "Generator seed (decimal or 0x hex)");
    if (with_file) app->add_option("--mdp", mdp_path, "Load the MDP from a JSON file instead");
  }
  InstanceSpec spec() const {
    InstanceSpec s;
    s.num_states = states;
    s.num_actions = actions;
    s.gamma = gamma;
    s.seed = parse_seed(instance_seed);
    if (!mdp_path.empty()) s.mdp_path = mdp_path;
    return s;
  }
};

struct SolverOptions {
  std::vector<std::string> algorithms{"eqvi"};
  std::size_t n_samples = 30;
  std::int64_t iters = 100;
  double theta = 0.6;
  std::optional<double> alpha;
  std::string selection = "round_robin";
  std::string step_counting = "per_pair";
  double hybrid_threshold = 1e-2;
  std::optional<std::int64_t> hybrid_at;

  void add(CLI::App* app, bool many) {
    if (many)
      app->add_option("--alg", algorithms, "Algorithms: qvi vi eqvi ql eqvi-async ql-async hybrid")->delimiter(',');
    else
      app->add_option("--alg", algorithms, "Algorithm tag")->expected(1);
    app->add_option("--n-samples", n_samples, "Samples per state-action pair per iteration")
        ->check(CLI::PositiveNumber);
    app->add_option("--iters", iters,
                    "Iterations (asynchronous algorithms: sweeps of |S||A| single-pair updates)");
    app->add_option("--theta", theta, "Q-learning step exponent, alpha_k = 1/k^theta");
    app->add_option("--alpha", alpha, "Constant Q-learning step size (overrides --theta)");
    app->add_option("--selection", selection, "Asynchronous pair selection: round_robin|uniform_random");
    app->add_option("--step-counting", step_counting, "Asynchronous QL step counter: per_pair|global");
    app->add_option("--hybrid-threshold", hybrid_threshold, "Hybrid: relative change that triggers the switch");
    app->add_option("--hybrid-at", hybrid_at, "Hybrid: switch after this many EQVI iterations");
  }

  SolverConfig config(const std::string& tag, std::size_t pairs) const {
    SolverConfig c;
    c.algorithm = parse_algorithm(tag);
    c.n_samples = n_samples;
    c.max_iters = iters;
    c.step = alpha ? StepSchedule::constant(*alpha) : StepSchedule::power(theta);
    c.selection = parse_selection(selection);
    if (step_counting == "per_pair")
      c.step_counting = StepCounting::per_pair;
    else if (step_counting == "global")
      c.step_counting = StepCounting::global;
    else
      throw DomainError("unknown step counting: " + step_counting);
    if (hybrid_at) {
      c.hybrid.kind = HybridSwitch::Kind::at_iteration;
      c.hybrid.iteration = *hybrid_at;
    } else {
      c.hybrid.kind = HybridSwitch::Kind::relative_change;
      c.hybrid.threshold = hybrid_threshold;
    }
    if (is_asynchronous(c.algorithm)) c.max_iters = iters * static_cast<std::int64_t>(pairs);
    c.validate();
    return c;
  }
};

int run_gen(const InstanceOptions& inst, const std::string& out) {
  const Mdp mdp = inst.spec().make();
  std::ostringstream os;
  write_mdp_json(mdp, os);
  emit(out, os.str());
  return 0;
}

int run_solve(const InstanceOptions& inst, const SolverOptions& so, const std::string& seed, std::int64_t snapshot,
              bool timing, const std::string& out) {
  ExperimentConfig cfg;
  cfg.instance = inst.spec();
  const Mdp probe = cfg.instance.make();
  cfg.solvers.push_back(make_entry(so.config(so.algorithms.at(0), probe.num_states() * probe.num_actions())));
  cfg.runs = 1;
  cfg.master_seed = parse_seed(seed);
  cfg.snapshot_stride = snapshot;
  cfg.record_timing = timing;
  cfg.parallel_jobs = false;
  const ExperimentResult result = run_experiment(cfg);
  emit(out, to_csv(result.records));
  return 0;
}

int run_bench(const InstanceOptions& inst, const SolverOptions& so, const std::string& seed, std::size_t runs,
              double threshold, std::int64_t snapshot, bool timing, const std::string& out,
              const std::string& summary_out) {
  ExperimentConfig cfg;
  cfg.instance = inst.spec();
  const Mdp probe = cfg.instance.make();
  for (const auto& tag : so.algorithms)
    cfg.solvers.push_back(make_entry(so.config(tag, probe.num_states() * probe.num_actions())));
  cfg.runs = runs;
  cfg.master_seed = parse_seed(seed);
  cfg.threshold = threshold;
  cfg.snapshot_stride = snapshot;
  cfg.record_timing = timing;
  const ExperimentResult result = run_experiment(cfg);
  emit(out, to_csv(result.records));
  const std::string summary = summary_json(result);
  if (!summary_out.empty()) {
    write_text_file(summary_out, summary + "\n");
  } else if (!out.empty() && out != "-") {
    write_text_file(out + ".summary.json", summary + "\n");
  }
  std::cerr << "threshold " << threshold << ":";
  for (const auto& s : result.summary) {
    std::cerr << ' ' << s.algorithm << '=';
    if (s.iterations_to_threshold)
      std::cerr << *s.iterations_to_threshold;
    else
      std::cerr << "not-reached";
  }
  std::cerr << '\n';
  return 0;
}

struct BoundOptions {
  BoundInputs in;
  std::optional<std::int64_t> n;
  std::string accuracy = "granular";
  bool json = false;
  std::optional<std::int64_t> async_n;
};

int run_bounds(BoundOptions b, const InstanceOptions& inst, const std::string& out) {
  b.in.num_states = inst.states;
  b.in.num_actions = inst.actions;
  b.in.gamma = inst.gamma;
  PnAccuracy acc;
  if (b.accuracy == "granular")
    acc = PnAccuracy::granular;
  else if (b.accuracy == "target")
    acc = PnAccuracy::target;
  else
    throw DomainError("unknown p_n accuracy: " + b.accuracy);
  const BoundReport r = compute_bounds(b.in, b.n, acc);
  std::string text = b.json ? to_json(r) + "\n" : format_table(r);
  if (b.async_n) {
    double raw = 0.0;
    const double clamped = async_failure_bound(b.in, *b.async_n, &raw);
    std::ostringstream os;
    if (b.json)
      os << nlohmann::json{{"async_n", *b.async_n}, {"async_failure_bound", clamped}, {"async_failure_raw", raw}}
                .dump()
         << '\n';
    else
      os << "async_failure_bound   " << clamped << " (raw " << raw << ", n = " << *b.async_n << ")\n";
    text += os.str();
  }
  emit(out, text);
  return 0;
}

struct CoupleOptions {
  std::string kind = "cftp";
  std::size_t trials = 100;
  std::int64_t cap = 1 << 14;
  std::size_t n = 10;
  std::string policy = "greedy";
  std::string mode = "independent";
  std::size_t s1 = 0;
  std::size_t s2 = 1;
};

int run_couple(const InstanceOptions& inst, const CoupleOptions& co, const std::string& seed,
               const std::string& out) {
  const Mdp mdp = inst.spec().make();
  PolicySequence policy(StationaryPolicy::uniform(mdp.num_states(), mdp.num_actions()));
  if (co.policy == "greedy") {
    const auto exact = solve_q_iteration(mdp, 1e-10);
    policy = PolicySequence(greedy_policy(exact.values));
  } else if (co.policy != "uniform") {
    throw DomainError("unknown policy: " + co.policy);
  }
  const NoiseStream stream(parse_seed(seed));
  CouplingReport report;
  if (co.kind == "cftp") {
    report = cftp_coalescence(mdp, policy, stream, co.n, co.cap, co.trials);
  } else if (co.kind == "hitting") {
    report = estimate_hitting_time(mdp, policy, co.s1, co.s2, co.trials, co.cap, co.n, stream);
  } else if (co.kind == "coupling") {
    CouplingMode mode;
    if (co.mode == "independent")
      mode = CouplingMode::independent;
    else if (co.mode == "shared")
      mode = CouplingMode::shared_noise;
    else
      throw DomainError("unknown coupling mode: " + co.mode);
    report = estimate_coupling_time(mdp, policy, co.s1, co.s2, co.trials, co.cap, co.n, stream, mode);
  } else {
    throw DomainError("unknown report kind: " + co.kind);
  }
  emit(out, to_json(report) + "\n");
  return 0;
}

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical Q-value iteration toolkit"};
  app.require_subcommand(1);

  std::string out;
  std::string seed = "1";
  std::int64_t snapshot = 0;
  bool timing = false;

  InstanceOptions gen_inst;
  auto* gen = app.add_subcommand("gen", "Write a random MDP as JSON");
  gen_inst.add(gen, false);
  gen->add_option("--seed", gen_inst.instance_seed, "Generator seed (alias of --instance-seed)");
  gen->add_option("--out", out, "Output path (default stdout)");

  InstanceOptions solve_inst;
  SolverOptions solve_opts;
  auto* solve = app.add_subcommand("solve", "Run one algorithm and write its trace CSV");
  solve_inst.add(solve);
  solve_opts.add(solve, false);
  solve->add_option("--seed", seed, "Noise master seed");
  solve->add_option("--snapshot-stride", snapshot, "Keep a Q table every j iterations");
  solve->add_flag("--timing", timing, "Record wall-clock time (makes the CSV non-reproducible)");
  solve->add_option("--out", out, "CSV output path (default stdout)");

  InstanceOptions bench_inst;
  SolverOptions bench_opts;
  bench_opts.algorithms = {"qvi", "eqvi", "ql"};
  std::size_t runs = 50;
  double threshold = 0.05;
  std::string summary_out;
  auto* bench = app.add_subcommand("bench", "Run a multi-seed, multi-algorithm experiment");
  bench_inst.add(bench);
  bench_opts.add(bench, true);
  bench->add_option("--seed", seed, "Master seed for all runs");
  bench->add_option("--runs", runs, "Runs per algorithm")->check(CLI::PositiveNumber);
  bench->add_option("--threshold", threshold, "Relative-error threshold for the summary");
  bench->add_option("--snapshot-stride", snapshot, "Keep a Q table every j iterations");
  bench->add_flag("--timing", timing, "Record wall-clock time (makes the CSV non-reproducible)");
  bench->add_option("--out", out, "CSV output path (default stdout)");
  bench->add_option("--summary", summary_out, "Summary JSON path (default <out>.summary.json)");

  InstanceOptions bound_inst;
  bound_inst.states = 1;
  bound_inst.actions = 1;
  BoundOptions bound_opts;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the sample-complexity bound");
  bound_inst.add(bounds, false);
  bounds->add_option("--epsilon", bound_opts.in.epsilon, "Target accuracy");
  bounds->add_option("--delta", bound_opts.in.delta, "Total failure probability");
  bounds->add_option("--delta1", bound_opts.in.delta1, "Failure budget of the sample-size step");
  bounds->add_option("--delta2", bound_opts.in.delta2, "Failure budget of the iteration-count step");
  bounds->add_option("--c-max", bound_opts.in.c_max, "Largest one-step cost");
  bounds->add_option("--n-samples", bound_opts.n, "Evaluate p_n at this n instead of the required n");
  bounds->add_option("--pn-accuracy", bound_opts.accuracy, "Accuracy in the p_n exponent: granular|target");
  bounds->add_option("--async-n", bound_opts.async_n, "Also report the asynchronous cycle failure bound at n");
  bounds->add_flag("--json", bound_opts.json, "JSON output");
  bounds->add_option("--out", out, "Output path (default stdout)");

  InstanceOptions couple_inst;
  couple_inst.states = 3;
  couple_inst.actions = 2;
  CoupleOptions couple_opts;
  auto* couple = app.add_subcommand("couple", "Coupling-from-the-past and coupling-time reports");
  couple_inst.add(couple);
  couple->add_option("--kind", couple_opts.kind, "cftp|hitting|coupling");
  couple->add_option("--trials", couple_opts.trials, "Number of trials");
  couple->add_option("--cap", couple_opts.cap, "Depth or horizon cap");
  couple->add_option("--n-samples", couple_opts.n, "Samples per empirical kernel row");
  couple->add_option("--policy", couple_opts.policy, "greedy|uniform");
  couple->add_option("--mode", couple_opts.mode, "Coupling: independent|shared");
  couple->add_option("--from", couple_opts.s1, "First start state (hitting: start)");
  couple->add_option("--to", couple_opts.s2, "Second start state (hitting: target)");
  couple->add_option("--seed", seed, "Noise seed");
  couple->add_option("--out", out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (gen->parsed()) return run_gen(gen_inst, out);
    if (solve->parsed()) return run_solve(solve_inst, solve_opts, seed, snapshot, timing, out);
    if (bench->parsed())
      return run_bench(bench_inst, bench_opts, seed, runs, threshold, snapshot, timing, out, summary_out);
    if (bounds->parsed()) return run_bounds(bound_opts, bound_inst, out);
    if (couple->parsed()) return run_couple(couple_inst, couple_opts, seed, out);
  } catch (const StructuralError& e) {
    print_error("structural", e.what());
    return 3;
  } catch (const InvalidMdp& e) {
    print_error("invalid_mdp", e.what());
    return 3;
  } catch (const DomainError& e) {
    print_error("domain", e.what());
    return 3;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return 1;
  }
  return 0;
}
