#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqvi/kernels.hpp"
#include "eqvi/mdp.hpp"
#include "eqvi/noise.hpp"

namespace eqvi {

enum class Algorithm { qvi, vi, eqvi, ql, eqvi_async, ql_async, hybrid };

/// CLI tags: qvi, vi, eqvi, ql, eqvi-async, ql-async, hybrid.
std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view tag);
bool is_asynchronous(Algorithm algorithm);

/// alpha_k = 1/k^theta (theta in (0.5,1]) or a constant alpha in (0,1].
struct StepSchedule {
  enum class Kind { power, constant };
  Kind kind = Kind::power;
  double theta = 0.6;
  double alpha = 1.0;

  static StepSchedule power(double theta) { return {Kind::power, theta, 1.0}; }
  static StepSchedule constant(double alpha) { return {Kind::constant, 0.6, alpha}; }
  /// Step size for the k-th update, k >= 1.
  double at(std::int64_t k) const;
  void validate() const;
};

enum class Selection { round_robin, uniform_random };
std::string_view to_string(Selection selection);
Selection parse_selection(std::string_view tag);

/// Which counter drives the asynchronous Q-learning schedule.
enum class StepCounting { per_pair, global };

struct HybridSwitch {
  enum class Kind { at_iteration, relative_change };
  Kind kind = Kind::relative_change;
  /// at_iteration: number of EQVI iterations before switching.
  std::int64_t iteration = 0;
  /// relative_change: switch once ||Q_{k+1} - Q_k|| / ||Q_{k+1}|| <= threshold.
  double threshold = 1e-2;
};

struct InitialQ {
  enum class Kind { zeros, constant, provided };
  Kind kind = Kind::zeros;
  double value = 0.0;
  std::optional<QTable> table;

  QTable make(std::size_t num_states, std::size_t num_actions) const;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::eqvi;
  std::size_t n_samples = 1;
  /// Synchronous algorithms: number of iterations. Asynchronous: number of
  /// single-pair updates.
  std::int64_t max_iters = 100;
  StepSchedule step;
  Selection selection = Selection::round_robin;
  StepCounting step_counting = StepCounting::per_pair;
  HybridSwitch hybrid;
  InitialQ initial;
  /// Keep a full QTable every j-th iteration; 0 keeps none.
  std::int64_t snapshot_stride = 0;
  /// Trace point every this many iterations (updates for asynchronous runs).
  std::int64_t record_stride = 1;
  bool record_timing = false;
  Exec exec = Exec::parallel;

  void validate() const;
};

struct TracePoint {
  std::int64_t iteration = 0;
  /// ||Q_k - Q_ref||_inf, NaN without a reference.
  double distance = 0.0;
  /// distance / ||Q_ref||_inf, NaN without a reference.
  double relative_error = 0.0;
  /// Sup-norm change made by the last iteration (0 at k = 0).
  double change = 0.0;
  std::uint64_t samples = 0;
  std::int64_t elapsed_ns = 0;
};

struct Snapshot {
  std::int64_t iteration = 0;
  QTable q;
};

struct SolveTrace {
  Algorithm algorithm = Algorithm::eqvi;
  std::vector<TracePoint> points;
  std::vector<Snapshot> snapshots;
  /// Asynchronous runs: K_1 < K_2 < ..., the updates at which every pair has
  /// been visited since the previous marker.
  std::vector<std::int64_t> cycle_times;
  /// Hybrid runs: number of EQVI iterations performed before the switch.
  std::optional<std::int64_t> switch_iteration;
  /// Hybrid: false when the switch criterion never fired within max_iters.
  bool switch_reached = true;
  QTable final_q;
  /// Value iteration keeps its V iterate here; final_q is then c + gamma P V.
  std::optional<VTable> final_v;
};

// Single steps -------------------------------------------------------------

/// Q^_{k+1}(s,a) = c(s,a) + (gamma/n) sum_i min_b q(psi(s,a,xi_i(s,a)), b)
QTable eqvi_step(const Mdp& mdp, const QTable& q, const NoiseBlock& block, std::size_t n,
                 Exec exec = Exec::parallel);

/// Same update through the empirical kernel: c + gamma sum_{s'} p^(s'|s,a) min_b q(s',b).
QTable empirical_q_operator(const Mdp& mdp, const QTable& q, const EmpiricalKernel& kernel);

/// (1 - alpha) q + alpha * eqvi_step(q); alpha in [0,1].
QTable ql_step(const Mdp& mdp, const QTable& q, const NoiseBlock& block, std::size_t n, double alpha,
               Exec exec = Exec::parallel);

/// Updates entry z only: (1-alpha) q(z) + alpha [c(z) + (gamma/n) sum_i min_b q(psi(z, xi_i), b)].
QTable async_update(const Mdp& mdp, const QTable& q, StateAction z, std::span<const double> samples, double alpha);

// Full runs ------------------------------------------------------------------
//
// Every run is a deterministic function of (mdp, cfg, stream). When a
// reference table is supplied each trace point carries its distance to it.

SolveTrace run_qvi(const Mdp& mdp, const SolverConfig& cfg, const QTable* reference = nullptr);
SolveTrace run_vi(const Mdp& mdp, const SolverConfig& cfg, const VTable* reference = nullptr);
SolveTrace run_eqvi(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream,
                    const QTable* reference = nullptr);
SolveTrace run_ql(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream,
                  const QTable* reference = nullptr);
SolveTrace run_async(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream,
                     const QTable* reference = nullptr);
SolveTrace run_hybrid(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream,
                      const QTable* reference = nullptr);

/// Dispatch on cfg.algorithm. For vi the reference is min_a of the Q reference.
SolveTrace run_solver(const Mdp& mdp, const SolverConfig& cfg, const NoiseStream& stream,
                      const QTable* reference = nullptr);

}  // namespace eqvi
