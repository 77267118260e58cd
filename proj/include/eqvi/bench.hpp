#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqvi/mdp.hpp"
#include "eqvi/solvers.hpp"

namespace eqvi {

/// Random instance: each kernel row is a normalized vector of independent
/// exponential(1) variates, every cost is uniform on [0,1]. All draws come from
/// the generator sub-stream of NoiseStream(seed).
Mdp generate_random_mdp(std::size_t num_states, std::size_t num_actions, double gamma, std::uint64_t seed);

/// ||q - q*||_inf / ||q*||_inf. Throws DomainError when q* is zero.
double relative_error(const QTable& q, const QTable& q_star);

struct InstanceSpec {
  std::size_t num_states = 100;
  std::size_t num_actions = 5;
  double gamma = 0.9;
  std::uint64_t seed = 1;
  /// When set the instance is loaded from this MDP JSON file instead.
  std::optional<std::string> mdp_path;

  Mdp make() const;
};

struct SolverEntry {
  /// Column value in the CSV; defaults to the algorithm's CLI tag.
  std::string tag;
  SolverConfig config;
};

SolverEntry make_entry(const SolverConfig& config, std::string tag = {});

struct ExperimentConfig {
  InstanceSpec instance;
  std::vector<SolverEntry> solvers;
  std::size_t runs = 1;
  std::uint64_t master_seed = 1;
  /// Overrides every solver's snapshot stride when positive.
  std::int64_t snapshot_stride = 0;
  double threshold = 0.05;
  bool record_timing = false;
  /// Run the (solver, run) jobs on the OpenMP worker pool.
  bool parallel_jobs = true;
  /// Permute the job execution order; the output does not depend on it.
  std::optional<std::uint64_t> shuffle_seed;

  void validate() const;
  bool mdp_path_missing() const;
};

/// One CSV row. Asynchronous solvers report one row per sweep of |S||A|
/// single-pair updates, so `iteration` is always contiguous from 0.
struct RunRecord {
  std::string algorithm;
  std::size_t run = 0;
  std::int64_t iteration = 0;
  double relative_error = 0.0;
  std::uint64_t cumulative_samples = 0;
  std::int64_t elapsed_ns = 0;
};

struct AlgorithmSummary {
  std::string algorithm;
  std::vector<std::int64_t> iterations;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::optional<std::int64_t> iterations_to_threshold;
};

struct ExperimentResult {
  Mdp mdp;
  QTable q_star;
  std::int64_t exact_iterations = 0;
  std::vector<RunRecord> records;  // sorted by (algorithm, run, iteration)
  std::vector<AlgorithmSummary> summary;
  double threshold = 0.05;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// First iteration whose mean error is <= threshold; nullopt means "not reached".
std::optional<std::int64_t> iterations_to_threshold(std::span<const std::int64_t> iterations,
                                                    std::span<const double> mean, double threshold);
std::optional<std::int64_t> iterations_to_threshold(const AlgorithmSummary& summary, double threshold);

std::vector<AlgorithmSummary> summarize(std::span<const RunRecord> records, double threshold);

inline constexpr const char* kCsvHeader = "algorithm,run,iteration,relative_error,cumulative_samples,elapsed_ns";

std::string to_csv(std::span<const RunRecord> records);
std::string summary_json(const ExperimentResult& result);

/// Writes `text` to `path`, throwing std::runtime_error on I/O failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace eqvi
