#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqvi/mdp.hpp"
#include "eqvi/noise.hpp"
#include "eqvi/solvers.hpp"

namespace eqvi {

/// Inputs to the sample-complexity bound for synchronous EQVI.
struct BoundInputs {
  double epsilon = 0.1;
  double delta = 0.1;
  double delta1 = 0.05;
  double delta2 = 0.025;
  double gamma = 0.9;
  std::size_t num_states = 1;
  std::size_t num_actions = 1;
  double c_max = 1.0;

  /// Throws DomainError unless eps in (0,1], delta in (0,1), delta1, delta2 > 0,
  /// delta1 + 2 delta2 <= delta, gamma in (0,1), c_max > 0 and |S|,|A| >= 1.
  void validate() const;
};

/// Which accuracy enters the exponent of p_n: the discretization scale eps_g
/// (default) or the target accuracy eps itself.
enum class PnAccuracy { granular, target };

struct BoundReport {
  double kappa_star = 0.0;   // c_max / (1 - gamma)
  std::int64_t eta_star = 0; // ceil(2 / (1 - gamma))
  double epsilon_g = 0.0;    // eps / eta*
  std::int64_t N_star = 0;   // ceil(kappa* / eps_g)
  /// kappa*^2 / (2 eps_g^2) * ln(2|S||A| / delta1), unrounded.
  double n_bound = 0.0;
  std::int64_t n_required = 0;  // ceil(n_bound)
  /// Sample size p_n is evaluated at (n_required unless overridden).
  std::int64_t n_used = 0;
  double p_n_raw = 0.0;      // unclamped 1 - 2|S||A| exp(...)
  double p_n = 0.0;          // clamped to [0,1]
  double one_minus_p_n = 0.0;
  /// The unclamped formula is <= 0: the bound says nothing at this n.
  bool vacuous = false;
  /// mu_n(i) for i = eta*..N*.
  std::vector<double> mu;
  double mu_min = 0.0;
  double log_mu_min = 0.0;
  /// min_i p_n mu_n(i): the minimum of the normalized distribution.
  double mu_min_normalized = 0.0;
  /// ln(1 / (delta2 mu_min)), unrounded, and its ceiling.
  double k_bound = 0.0;
  std::int64_t k_required = 0;
  bool feasible = true;
  std::string infeasibility;
  PnAccuracy accuracy = PnAccuracy::granular;
};

BoundReport compute_bounds(const BoundInputs& in, std::optional<std::int64_t> n_override = std::nullopt,
                           PnAccuracy accuracy = PnAccuracy::granular);

/// Aligned two-column text rendering of a report.
std::string format_table(const BoundReport& report);
std::string to_json(const BoundReport& report);

/// 2|S||A| exp(-2 (eps / (gamma |S||A|))^2 n / (2 kappa*)^2): failure bound of
/// one asynchronous full cycle. `unclamped` receives the raw value.
double async_failure_bound(const BoundInputs& in, std::int64_t n, double* unclamped = nullptr);

/// Step rule of the dominating chain when it does not reset to N*.
enum class DominatingStep {
  decrement,    // Y_k = max(Y_{k-1} - 1, eta*)
  literal_max,  // Y_k = max(Y_{k-1}, eta*)
};

struct DominatingChainRun {
  std::vector<std::int64_t> trajectory;  // Y_0..Y_horizon
  /// occupation[i - eta*] = fraction of steps 1..horizon spent at level i.
  std::vector<double> occupation;
  double fraction_at_N = 0.0;
};

/// Simulates Y_k from Y_0 = initial (N* by default): with probability p_n take
/// the step rule, otherwise reset to N*. Draws come from the chain sub-stream.
DominatingChainRun simulate_dominating_chain(double p_n, std::int64_t eta_star, std::int64_t N_star,
                                             std::int64_t horizon, const NoiseStream& stream,
                                             DominatingStep rule = DominatingStep::decrement,
                                             std::optional<std::int64_t> initial = std::nullopt);

struct DominanceCheck {
  std::int64_t iteration = 0;
  /// max_j [ P(error level >= j) - P(Y >= j) ] over levels j.
  double max_excess = 0.0;
  bool dominated = false;
};

struct DominanceReport {
  BoundReport bounds;
  std::size_t seeds = 0;
  std::int64_t max_error_level = 0;
  /// error_levels[seed][k] = ceil(||Q^_k - Q*|| / eps_g).
  std::vector<std::vector<std::int64_t>> error_levels;
  std::vector<DominanceCheck> checks;
  /// Diagnostic flag; the report never throws on a violation.
  bool all_dominated = true;
};

/// Runs EQVI on `seeds` streams, discretizes the error at scale eps_g, simulates
/// the dominating chain at p_n evaluated for cfg.n_samples, and compares the
/// empirical tail functions at every checked iteration (stride `check_every`).
/// A check passes when the excess is at most the DKW slack sqrt(ln(2/0.05) / (2 seeds)).
DominanceReport dominance_diagnostic(const Mdp& mdp, const SolverConfig& cfg, const BoundInputs& in,
                                     std::size_t seeds, std::uint64_t master_seed = 1,
                                     std::int64_t check_every = 1);

}  // namespace eqvi
