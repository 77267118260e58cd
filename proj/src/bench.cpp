#include "eqvi/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "eqvi/dp.hpp"
#include "eqvi/error.hpp"
#include "eqvi/noise.hpp"
#include "eqvi/stats.hpp"

namespace eqvi {

Mdp generate_random_mdp(std::size_t num_states, std::size_t num_actions, double gamma, std::uint64_t seed) {
  if (num_states < 1 || num_actions < 1) throw StructuralError("generate_random_mdp: |S| and |A| must be >= 1");
  const NoiseStream stream(seed);
  std::vector<double> cost(num_states * num_actions);
  std::vector<double> kernel(num_states * num_actions * num_states);
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      const std::size_t pair = s * num_actions + a;
      cost[pair] = stream.uniform(StreamLabel::generator, 1, s, a, 0);
      double* row = kernel.data() + pair * num_states;
      double total = 0.0;
      for (std::size_t t = 0; t < num_states; ++t) {
        row[t] = -std::log(stream.open_uniform(StreamLabel::generator, 0, s, a, t));
        total += row[t];
      }
      for (std::size_t t = 0; t < num_states; ++t) row[t] /= total;
    }
  }
  return Mdp(num_states, num_actions, gamma, std::move(cost), std::move(kernel));
}

double relative_error(const QTable& q, const QTable& q_star) {
  if (!q.same_shape(q_star)) throw StructuralError("relative_error: shape mismatch");
  const double scale = sup_norm(q_star.values());
  if (!(scale > 0.0)) throw DomainError("relative_error: ||q*|| is zero");
  return sup_distance(q, q_star) / scale;
}

Mdp InstanceSpec::make() const {
  if (mdp_path) return load_mdp(*mdp_path);
  return generate_random_mdp(num_states, num_actions, gamma, seed);
}

SolverEntry make_entry(const SolverConfig& config, std::string tag) {
  if (tag.empty()) tag = std::string(to_string(config.algorithm));
  return SolverEntry{std::move(tag), config};
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw DomainError("experiment: runs must be >= 1");
  if (solvers.empty()) throw DomainError("experiment: no solvers configured");
  if (!(threshold > 0.0 && threshold < 1.0)) throw DomainError("experiment: threshold must lie in (0,1)");
  if (mdp_path_missing()) throw DomainError("experiment: MDP file not found: " + *instance.mdp_path);
  std::vector<std::string> tags;
  for (const auto& e : solvers) {
    if (e.tag.empty()) throw DomainError("experiment: empty solver tag");
    if (e.tag.find_first_of(",\"\n") != std::string::npos) throw DomainError("experiment: tag not CSV-safe: " + e.tag);
    e.config.validate();
    tags.push_back(e.tag);
  }
  std::sort(tags.begin(), tags.end());
  if (std::adjacent_find(tags.begin(), tags.end()) != tags.end())
    throw DomainError("experiment: solver tags must be unique");
}

bool ExperimentConfig::mdp_path_missing() const {
  if (!instance.mdp_path) return false;
  std::ifstream in(*instance.mdp_path);
  return !in.good();
}

namespace {

struct Job {
  std::size_t solver = 0;
  std::size_t run = 0;
};

std::vector<RunRecord> records_from(const std::string& tag, std::size_t run, const SolveTrace& trace,
                                    std::int64_t stride) {
  std::vector<RunRecord> out;
  out.reserve(trace.points.size());
  for (const auto& p : trace.points) {
    RunRecord r;
    r.algorithm = tag;
    r.run = run;
    r.iteration = p.iteration / stride;
    r.relative_error = p.relative_error;
    r.cumulative_samples = p.samples;
    r.elapsed_ns = p.elapsed_ns;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Mdp mdp = cfg.instance.make();
  auto exact = solve_q_iteration(mdp, 1e-12, 0);
  if (!exact.converged) {
    throw std::runtime_error("run_experiment: exact Q* did not converge after " + std::to_string(exact.iterations) +
                             " iterations (last change " + std::to_string(exact.last_change) + ")");
  }
  const QTable q_star = exact.values;
  const auto pairs = static_cast<std::int64_t>(mdp.num_states() * mdp.num_actions());

  std::vector<Job> jobs;
  for (std::size_t s = 0; s < cfg.solvers.size(); ++s)
    for (std::size_t r = 0; r < cfg.runs; ++r) jobs.push_back({s, r});
  if (cfg.shuffle_seed) std::shuffle(jobs.begin(), jobs.end(), std::mt19937_64(*cfg.shuffle_seed));

  const NoiseStream master(cfg.master_seed);
  std::vector<std::vector<RunRecord>> slots(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const auto count = static_cast<std::int64_t>(jobs.size());

#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel_jobs)
  for (std::int64_t j = 0; j < count; ++j) {
    try {
      const Job& job = jobs[static_cast<std::size_t>(j)];
      const SolverEntry& entry = cfg.solvers[job.solver];
      SolverConfig sc = entry.config;
      sc.exec = Exec::serial;
      sc.record_timing = cfg.record_timing;
      if (cfg.snapshot_stride > 0) sc.snapshot_stride = cfg.snapshot_stride;
      const std::int64_t stride = is_asynchronous(sc.algorithm) ? pairs : 1;
      sc.record_stride = stride;
      const SolveTrace trace = run_solver(mdp, sc, master.split(job.run), &q_star);
      slots[static_cast<std::size_t>(j)] = records_from(entry.tag, job.run, trace, stride);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(j)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("run_experiment: " + e);

  ExperimentResult result{std::move(mdp), q_star, exact.iterations, {}, {}, cfg.threshold};
  for (auto& slot : slots)
    for (auto& r : slot) result.records.push_back(std::move(r));
  std::sort(result.records.begin(), result.records.end(), [](const RunRecord& x, const RunRecord& y) {
    return std::tie(x.algorithm, x.run, x.iteration) < std::tie(y.algorithm, y.run, y.iteration);
  });
  result.summary = summarize(result.records, cfg.threshold);
  return result;
}

std::optional<std::int64_t> iterations_to_threshold(std::span<const std::int64_t> iterations,
                                                    std::span<const double> mean, double threshold) {
  if (iterations.size() != mean.size()) throw StructuralError("iterations_to_threshold: length mismatch");
  for (std::size_t i = 0; i < mean.size(); ++i)
    if (mean[i] <= threshold) return iterations[i];
  return std::nullopt;
}

std::optional<std::int64_t> iterations_to_threshold(const AlgorithmSummary& summary, double threshold) {
  return iterations_to_threshold(summary.iterations, summary.mean, threshold);
}

std::vector<AlgorithmSummary> summarize(std::span<const RunRecord> records, double threshold) {
  std::vector<RunRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(), [](const RunRecord& x, const RunRecord& y) {
    return std::tie(x.algorithm, x.iteration, x.run) < std::tie(y.algorithm, y.iteration, y.run);
  });
  std::vector<AlgorithmSummary> out;
  std::size_t i = 0;
  while (i < sorted.size()) {
    AlgorithmSummary summary;
    summary.algorithm = sorted[i].algorithm;
    while (i < sorted.size() && sorted[i].algorithm == summary.algorithm) {
      const std::int64_t it = sorted[i].iteration;
      std::vector<double> values;
      while (i < sorted.size() && sorted[i].algorithm == summary.algorithm && sorted[i].iteration == it)
        values.push_back(sorted[i++].relative_error);
      summary.iterations.push_back(it);
      summary.mean.push_back(stats::mean(values));
      summary.stddev.push_back(values.size() > 1 ? stats::stddev(values) : 0.0);
    }
    summary.iterations_to_threshold = iterations_to_threshold(summary, threshold);
    out.push_back(std::move(summary));
  }
  return out;
}

std::string to_csv(std::span<const RunRecord> records) {
  std::string out = kCsvHeader;
  out += '\n';
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, ",%zu,%lld,%.17g,%llu,%lld\n", r.run, static_cast<long long>(r.iteration),
                  r.relative_error, static_cast<unsigned long long>(r.cumulative_samples),
                  static_cast<long long>(r.elapsed_ns));
    out += r.algorithm;
    out += buf;
  }
  return out;
}

std::string summary_json(const ExperimentResult& result) {
  nlohmann::json j;
  j["threshold"] = result.threshold;
  j["exact_iterations"] = result.exact_iterations;
  j["q_star_norm"] = sup_norm(result.q_star.values());
  j["algorithms"] = nlohmann::json::array();
  for (const auto& s : result.summary) {
    nlohmann::json a;
    a["algorithm"] = s.algorithm;
    a["iterations"] = s.iterations;
    a["mean"] = s.mean;
    a["std"] = s.stddev;
    if (s.iterations_to_threshold)
      a["iterations_to_threshold"] = *s.iterations_to_threshold;
    else
      a["iterations_to_threshold"] = "not reached";
    j["algorithms"].push_back(std::move(a));
  }
  return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace eqvi
