#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqvi/mdp.hpp"
#include "eqvi/noise.hpp"
#include "eqvi/stats.hpp"

namespace eqvi {

/// State-action path over the time indices start_index, start_index+1, ...
struct SimPath {
  std::int64_t start_index = 0;
  std::vector<StateAction> steps;

  std::int64_t end_index() const { return start_index + static_cast<std::int64_t>(steps.size()) - 1; }
  const StateAction& at(std::int64_t time) const { return steps.at(static_cast<std::size_t>(time - start_index)); }
};

/// Forward simulation: X_{k+1} is drawn from kernels[k](.|X_k, Z_k) with
/// nu_k(X_k, Z_k), and Z_{k+1} from policy.at(k+1) with nu~_{k+1}(X_{k+1}).
/// The path has horizon + 1 entries, indexed 0..horizon.
SimPath forward_simulate(const Mdp& mdp, std::span<const EmpiricalKernel> kernels, const PolicySequence& policy,
                         StateAction start, std::int64_t horizon, const NoiseStream& nu_stream);

/// Backward simulation over times -k0..0. The transition into time m uses
/// kernels[-m] and the noise nu_{-m}(X_{m-1}, Z_{m-1}); the action at time m
/// uses policy.at(-m) and nu~_{-m}(X_m). Noise depends only on (time, state,
/// action), so all start states share the transitions at equal times.
SimPath backward_simulate(const Mdp& mdp, std::span<const EmpiricalKernel> kernels, const PolicySequence& policy,
                          StateAction start, std::int64_t k0, const NoiseStream& nu_stream);

/// Empirical kernels p^_0..p^_{count-1}, built exactly as EQVI builds them
/// from `stream` (label kernel_samples, iteration j, n samples per pair).
std::vector<EmpiricalKernel> empirical_kernel_sequence(const Mdp& mdp, const NoiseStream& stream, std::size_t n,
                                                       std::int64_t count);

/// Hitting, coupling and coalescence samples. Censored trials hold the cap.
struct CouplingReport {
  std::string kind;
  std::size_t trials = 0;
  std::int64_t horizon_cap = 0;
  std::vector<std::int64_t> times;
  std::vector<bool> censored;
  std::size_t censored_count = 0;
  /// Mean and max over uncensored trials (0 when all are censored).
  double mean = 0.0;
  std::int64_t max = 0;
};

std::string to_json(const CouplingReport& report);

/// Coupling from the past: every start state begins at time -K, K = 1, 2, 4, ...,
/// until all paths agree at time 0 or K would exceed depth_cap. The policy is
/// indexed by the remaining horizon (policy.at(j) acts at time -j). Each trial
/// uses stream.split(trial) for its kernels and transition noise.
CouplingReport cftp_coalescence(const Mdp& mdp, const PolicySequence& policy, const NoiseStream& stream,
                                std::size_t n, std::int64_t depth_cap, std::size_t trials);

/// Grand-coupling check for one trial: do all start states launched at time
/// -depth agree at time 0? Exposed for the depth-monotonicity property.
bool coalesces_from(const Mdp& mdp, const PolicySequence& policy, const NoiseStream& trial_stream, std::size_t n,
                    std::int64_t depth);

/// Monte Carlo hitting time of `target` from s0 under fresh empirical kernels
/// at every step (n samples each).
CouplingReport estimate_hitting_time(const Mdp& mdp, const PolicySequence& policy, State s0, State target,
                                     std::size_t trials, std::int64_t horizon_cap, std::size_t n,
                                     const NoiseStream& stream);

enum class CouplingMode {
  independent,   // two independent copies (omega, nu), (omega', nu')
  shared_noise,  // both chains read the same kernels and noise
};

/// First meeting time of two chains started at (s1, s2) at time start_time.
CouplingReport estimate_coupling_time(const Mdp& mdp, const PolicySequence& policy, State s1, State s2,
                                      std::size_t trials, std::int64_t horizon_cap, std::size_t n,
                                      const NoiseStream& stream, CouplingMode mode = CouplingMode::independent,
                                      std::int64_t start_time = 0);

/// Least-squares fit of log P^(tau > r) against r over the range where at
/// least `min_survivors` trials survive.
stats::LinearFit survival_log_slope(const CouplingReport& report, std::size_t min_survivors = 20);

/// Greedy policies w.r.t. Q~_0..Q~_{count-1}, indexed by remaining horizon.
PolicySequence greedy_policy_sequence(std::span<const QTable> qtilde);

enum class ForwardBackwardMode { exact_dp, monte_carlo };

struct EntryCheck {
  StateAction pair;
  double forward = 0.0;      // Q^_k(s,a)
  double backward = 0.0;     // Q~_k(s,a) (exact or MC mean)
  double std_error = 0.0;    // MC only
};

struct ForwardBackwardReport {
  ForwardBackwardMode mode = ForwardBackwardMode::exact_dp;
  std::int64_t k = 0;
  std::size_t n = 0;
  std::size_t paths = 0;
  /// exact_dp: max |Q~_j - Q^_j| over j <= k and all pairs.
  double max_abs_diff = 0.0;
  /// Location of the largest discrepancy.
  StateAction worst_pair;
  std::int64_t worst_iteration = 0;
  /// monte_carlo: entries whose |mean - Q^_k| exceeds 3 standard errors.
  std::size_t outside_3sigma = 0;
  std::vector<EntryCheck> entries;
  bool passed = false;
};

/// Checks Q~_k (the backward-simulation expectation, seeded with h) against the
/// EQVI iterate Q^_k driven by the same empirical kernels.
///
/// exact_dp propagates the state distribution of the backward chain through
/// the fixed kernels and greedy policies, giving Q~_j for all j <= k without
/// the EQVI recursion; it passes when every discrepancy is <= 1e-9.
/// monte_carlo averages the discounted cost of `paths` backward trajectories
/// per entry and passes when every entry is within 3 standard errors (plus a
/// 1e-9 relative floor for constant totals).
ForwardBackwardReport verify_forward_backward(const Mdp& mdp, const QTable& h, std::int64_t k,
                                              const NoiseStream& stream, std::size_t n, ForwardBackwardMode mode,
                                              std::size_t paths = 0,
                                              std::optional<NoiseStream> path_stream = std::nullopt);

/// Q~_0..Q~_k by distribution propagation (the exact_dp route).
std::vector<QTable> backward_expectations(const Mdp& mdp, const QTable& h, std::span<const EmpiricalKernel> kernels);

}  // namespace eqvi
