#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "eqvi/mdp.hpp"
#include "eqvi/noise.hpp"

namespace eqvi {

/// Execution policy for the data-parallel backups. Every output entry is
/// computed by the same arithmetic in both modes, so results are bitwise equal.
enum class Exec { serial, parallel };

namespace kernels {

// out(s,a) = c(s,a) + gamma * sum_{s'} p(s'|s,a) v(s')
void expected_backup_serial(const Mdp& mdp, std::span<const double> v, std::span<double> out);
void expected_backup_omp(const Mdp& mdp, std::span<const double> v, std::span<double> out);

/// Per-row work space for grouping successor draws.
struct RowScratch {
  explicit RowScratch(std::size_t num_states) : count(num_states, 0) {}
  std::vector<std::uint32_t> count;
  std::vector<State> touched;
};

/// sum_{s'} (count(s')/n) v(s') over the successors psi(s,a,xi_i), added in
/// increasing s' order. When every draw lands on one state the result is that
/// state's value exactly, as in the expected backup with a one-hot row.
/// Each xi must lie in [0,1].
inline double empirical_mean(const Mdp& mdp, State s, Action a, std::span<const double> xi, std::span<const double> v,
                             RowScratch& scratch) {
  for (double x : xi) {
    const State t = psi_unchecked(mdp, s, a, x);
    if (scratch.count[t]++ == 0) scratch.touched.push_back(t);
  }
  std::sort(scratch.touched.begin(), scratch.touched.end());
  const double n = static_cast<double>(xi.size());
  double acc = 0.0;
  for (State t : scratch.touched) {
    acc += static_cast<double>(scratch.count[t]) / n * v[t];
    scratch.count[t] = 0;
  }
  scratch.touched.clear();
  return acc;
}

// out(s,a) = c(s,a) + gamma * sum_{s'} p^(s'|s,a) v(s'), p^ from the block's draws
void empirical_backup_serial(const Mdp& mdp, std::span<const double> v, const NoiseBlock& block,
                             std::span<double> out);
void empirical_backup_omp(const Mdp& mdp, std::span<const double> v, const NoiseBlock& block, std::span<double> out);

inline void expected_backup(Exec exec, const Mdp& mdp, std::span<const double> v, std::span<double> out) {
  exec == Exec::parallel ? expected_backup_omp(mdp, v, out) : expected_backup_serial(mdp, v, out);
}
inline void empirical_backup(Exec exec, const Mdp& mdp, std::span<const double> v, const NoiseBlock& block,
                             std::span<double> out) {
  exec == Exec::parallel ? empirical_backup_omp(mdp, v, block, out) : empirical_backup_serial(mdp, v, block, out);
}

}  // namespace kernels
}  // namespace eqvi
