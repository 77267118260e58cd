#include "eqvi/dp.hpp"

#include <algorithm>
#include <cmath>

#include "eqvi/error.hpp"

namespace eqvi {

namespace {

void check_shape(const Mdp& mdp, const QTable& q) {
  if (q.num_states() != mdp.num_states() || q.num_actions() != mdp.num_actions())
    throw StructuralError("QTable shape does not match MDP");
}

}  // namespace

VTable bellman_apply(const Mdp& mdp, const VTable& v, Exec exec) {
  if (v.size() != mdp.num_states()) throw StructuralError("VTable size does not match MDP");
  QTable backup(mdp.num_states(), mdp.num_actions());
  kernels::expected_backup(exec, mdp, v.values(), backup.values());
  return backup.minima();
}

QTable q_operator_apply(const Mdp& mdp, const QTable& q, Exec exec) {
  check_shape(mdp, q);
  const VTable vmin = q.minima();
  QTable out(mdp.num_states(), mdp.num_actions());
  kernels::expected_backup(exec, mdp, vmin.values(), out.values());
  return out;
}

std::int64_t default_max_iters(const Mdp& mdp, double tol) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const double kappa = mdp.kappa_star();
  if (kappa <= 0.0) return 10;
  const double ratio = tol * (1.0 - mdp.gamma()) / kappa;
  if (ratio >= 1.0) return 10;
  const double steps = std::ceil(std::log(ratio) / std::log(mdp.gamma()));
  return 10 * std::max<std::int64_t>(1, static_cast<std::int64_t>(steps));
}

FixedPointResult<VTable> solve_value_iteration(const Mdp& mdp, double tol, std::int64_t max_iters, const VTable* v0) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (max_iters <= 0) max_iters = default_max_iters(mdp, tol);
  FixedPointResult<VTable> result;
  result.values = v0 ? *v0 : VTable(mdp.num_states());
  if (result.values.size() != mdp.num_states()) throw StructuralError("initial VTable size does not match MDP");
  while (result.iterations < max_iters) {
    VTable next = bellman_apply(mdp, result.values);
    result.last_change = sup_distance(next, result.values);
    result.values = std::move(next);
    ++result.iterations;
    if (result.last_change <= tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

FixedPointResult<QTable> solve_q_iteration(const Mdp& mdp, double tol, std::int64_t max_iters, const QTable* q0) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (max_iters <= 0) max_iters = default_max_iters(mdp, tol);
  FixedPointResult<QTable> result;
  result.values = q0 ? *q0 : QTable(mdp.num_states(), mdp.num_actions());
  check_shape(mdp, result.values);
  while (result.iterations < max_iters) {
    QTable next = q_operator_apply(mdp, result.values);
    result.last_change = sup_distance(next, result.values);
    result.values = std::move(next);
    ++result.iterations;
    if (result.last_change <= tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

StationaryPolicy greedy_policy(const QTable& q) {
  for (double x : q.values())
    if (!std::isfinite(x)) throw DomainError("greedy_policy: non-finite Q entry");
  std::vector<Action> choice(q.num_states());
  for (State s = 0; s < q.num_states(); ++s) choice[s] = q.row_argmin(s);
  return StationaryPolicy::deterministic(q.num_actions(), choice);
}

std::vector<double> policy_kernel(const Mdp& mdp, const StationaryPolicy& policy) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
    throw StructuralError("policy shape does not match MDP");
  const std::size_t S = mdp.num_states();
  std::vector<double> out(S * S, 0.0);
  for (State s = 0; s < S; ++s) {
    for (Action a = 0; a < mdp.num_actions(); ++a) {
      const double w = policy(s, a);
      if (w == 0.0) continue;
      const auto p = mdp.row(s, a);
      for (State t = 0; t < S; ++t) out[s * S + t] += w * p[t];
    }
  }
  return out;
}

}  // namespace eqvi
