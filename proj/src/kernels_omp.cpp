#include "eqvi/kernels.hpp"

#include <cstdint>

namespace eqvi::kernels {

void expected_backup_omp(const Mdp& mdp, std::span<const double> v, std::span<double> out) {
  const std::int64_t S = static_cast<std::int64_t>(mdp.num_states());
  const std::int64_t A = static_cast<std::int64_t>(mdp.num_actions());
  const double gamma = mdp.gamma();
  const double* cost = mdp.costs().data();
  const double* vv = v.data();
  double* o = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t pair = 0; pair < S * A; ++pair) {
    const auto p = mdp.row(static_cast<State>(pair / A), static_cast<Action>(pair % A));
    double acc = 0.0;
    for (std::int64_t t = 0; t < S; ++t) acc += p[t] * vv[t];
    o[pair] = cost[pair] + gamma * acc;
  }
}

void empirical_backup_omp(const Mdp& mdp, std::span<const double> v, const NoiseBlock& block, std::span<double> out) {
  const std::int64_t S = static_cast<std::int64_t>(mdp.num_states());
  const std::int64_t A = static_cast<std::int64_t>(mdp.num_actions());
  const double gamma = mdp.gamma();
  const double* cost = mdp.costs().data();
  double* o = out.data();
#pragma omp parallel
  {
    RowScratch scratch(static_cast<std::size_t>(S));
#pragma omp for schedule(static)
    for (std::int64_t pair = 0; pair < S * A; ++pair) {
      const State s = static_cast<State>(pair / A);
      const Action a = static_cast<Action>(pair % A);
      o[pair] = cost[pair] + gamma * empirical_mean(mdp, s, a, block.samples(s, a), v, scratch);
    }
  }
}

}  // namespace eqvi::kernels
