#pragma once

#include <cstdint>
#include <vector>

#include "eqvi/kernels.hpp"
#include "eqvi/mdp.hpp"

namespace eqvi {

/// (T v)(s) = min_a [ c(s,a) + gamma * sum_{s'} p(s'|s,a) v(s') ]
VTable bellman_apply(const Mdp& mdp, const VTable& v, Exec exec = Exec::parallel);

/// (G q)(s,a) = c(s,a) + gamma * sum_{s'} p(s'|s,a) min_b q(s',b)
QTable q_operator_apply(const Mdp& mdp, const QTable& q, Exec exec = Exec::parallel);

/// Iteration cap from the contraction rate: 10 * ceil(log(tol (1-gamma) / kappa*) / log gamma).
std::int64_t default_max_iters(const Mdp& mdp, double tol);

template <class Table>
struct FixedPointResult {
  Table values;
  std::int64_t iterations = 0;
  /// Sup-norm change of the last iteration.
  double last_change = 0.0;
  /// False when max_iters ran out before the change fell to tol.
  bool converged = false;
};

/// Value iteration from v0 (zeros by default) until the successive sup-norm
/// change is <= tol. max_iters <= 0 selects default_max_iters.
FixedPointResult<VTable> solve_value_iteration(const Mdp& mdp, double tol, std::int64_t max_iters = 0,
                                               const VTable* v0 = nullptr);

/// Q-value iteration; same stopping rule as solve_value_iteration.
FixedPointResult<QTable> solve_q_iteration(const Mdp& mdp, double tol, std::int64_t max_iters = 0,
                                           const QTable* q0 = nullptr);

/// Deterministic greedy policy, lowest action index on ties.
StationaryPolicy greedy_policy(const QTable& q);

/// P^pi(s,s') = sum_a p(s'|s,a) pi(s,a), flat row-major S x S.
std::vector<double> policy_kernel(const Mdp& mdp, const StationaryPolicy& policy);

}  // namespace eqvi
