// Serial reference backups. The OpenMP versions in kernels_omp.cpp must match
// these bit for bit.
#include "eqvi/kernels.hpp"

namespace eqvi::kernels {

void expected_backup_serial(const Mdp& mdp, std::span<const double> v, std::span<double> out) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const double gamma = mdp.gamma();
  for (std::size_t pair = 0; pair < S * A; ++pair) {
    const auto p = mdp.row(pair / A, pair % A);
    double acc = 0.0;
    for (std::size_t t = 0; t < S; ++t) acc += p[t] * v[t];
    out[pair] = mdp.costs()[pair] + gamma * acc;
  }
}

void empirical_backup_serial(const Mdp& mdp, std::span<const double> v, const NoiseBlock& block,
                             std::span<double> out) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const double gamma = mdp.gamma();
  RowScratch scratch(S);
  for (std::size_t pair = 0; pair < S * A; ++pair) {
    const State s = pair / A;
    const Action a = pair % A;
    out[pair] = mdp.costs()[pair] + gamma * empirical_mean(mdp, s, a, block.samples(s, a), v, scratch);
  }
}

}  // namespace eqvi::kernels
