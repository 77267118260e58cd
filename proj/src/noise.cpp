#include "eqvi/noise.hpp"

#include <cmath>

#include "eqvi/error.hpp"

namespace eqvi {

State psi(const Mdp& mdp, State s, Action a, double xi) {
  if (s >= mdp.num_states() || a >= mdp.num_actions()) throw StructuralError("psi: state-action out of range");
  if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("psi: noise must lie in [0,1]");
  return psi_unchecked(mdp, s, a, xi);
}

NoiseBlock::NoiseBlock(std::size_t num_states, std::size_t num_actions, std::size_t n, std::vector<double> samples)
    : num_states_(num_states), num_actions_(num_actions), n_(n), samples_(std::move(samples)) {
  if (n_ == 0) throw DomainError("noise block needs n >= 1 samples per pair");
  if (samples_.size() != num_states_ * num_actions_ * n_) throw StructuralError("noise block has wrong size");
}

NoiseBlock draw_noise_block(const NoiseStream& stream, std::int64_t k, std::size_t n, std::size_t num_states,
                            std::size_t num_actions, StreamLabel label) {
  if (n == 0) throw DomainError("draw_noise_block: n must be >= 1");
  std::vector<double> samples(num_states * num_actions * n);
  for (State s = 0; s < num_states; ++s) {
    for (Action a = 0; a < num_actions; ++a) {
      const auto key = stream.key(label, k, s, a);
      double* out = samples.data() + (s * num_actions + a) * n;
      for (std::size_t i = 0; i < n; ++i) out[i] = NoiseStream::uniform_from_key(key, i);
    }
  }
  return NoiseBlock(num_states, num_actions, n, std::move(samples));
}

EmpiricalKernel::EmpiricalKernel(std::size_t num_states, std::size_t num_actions, std::size_t n,
                                 std::vector<std::uint32_t> counts)
    : num_states_(num_states), num_actions_(num_actions), n_(n), counts_(std::move(counts)) {
  if (n_ == 0) throw DomainError("empirical kernel needs n >= 1");
  if (counts_.size() != num_states_ * num_actions_ * num_states_) throw StructuralError("count table has wrong size");
  for (std::size_t pair = 0; pair < num_states_ * num_actions_; ++pair) {
    std::size_t total = 0;
    for (State t = 0; t < num_states_; ++t) total += counts_[pair * num_states_ + t];
    if (total != n_) throw DomainError("empirical kernel row counts must sum to n");
  }
}

EmpiricalKernel EmpiricalKernel::from_deterministic(const Mdp& mdp) {
  if (!mdp.is_deterministic()) throw DomainError("from_deterministic: kernel is not 0/1");
  std::vector<std::uint32_t> counts(mdp.kernel().size());
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = mdp.kernel()[i] == 1.0 ? 1u : 0u;
  return EmpiricalKernel(mdp.num_states(), mdp.num_actions(), 1, std::move(counts));
}

State sample_counts(std::span<const std::uint32_t> counts, std::size_t n, double u) {
  const double target = u * static_cast<double>(n);
  std::size_t cum = 0;
  State last = 0;
  for (State t = 0; t < counts.size(); ++t) {
    if (counts[t] == 0) continue;
    cum += counts[t];
    last = t;
    if (target < static_cast<double>(cum)) return t;
  }
  return last;
}

State EmpiricalKernel::sample(State s, Action a, double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("empirical kernel draw outside [0,1]");
  return sample_counts(counts(s, a), n_, u);
}

EmpiricalKernel empirical_kernel(const Mdp& mdp, const NoiseBlock& block, std::size_t n) {
  if (block.num_states() != mdp.num_states() || block.num_actions() != mdp.num_actions())
    throw StructuralError("empirical_kernel: block shape does not match MDP");
  if (block.samples_per_pair() != n) throw StructuralError("empirical_kernel: block sample count mismatch");
  const std::size_t S = mdp.num_states();
  std::vector<std::uint32_t> counts(mdp.num_pairs() * S, 0);
  for (State s = 0; s < S; ++s) {
    for (Action a = 0; a < mdp.num_actions(); ++a) {
      std::uint32_t* row = counts.data() + (s * mdp.num_actions() + a) * S;
      for (double xi : block.samples(s, a)) ++row[psi_unchecked(mdp, s, a, xi)];
    }
  }
  return EmpiricalKernel(S, mdp.num_actions(), n, std::move(counts));
}

std::vector<std::uint32_t> empirical_row(const Mdp& mdp, const NoiseStream& stream, std::int64_t k, State s,
                                         Action a, std::size_t n) {
  std::vector<std::uint32_t> counts(mdp.num_states(), 0);
  const auto key = stream.key(StreamLabel::kernel_samples, k, s, a);
  for (std::size_t i = 0; i < n; ++i) ++counts[psi_unchecked(mdp, s, a, NoiseStream::uniform_from_key(key, i))];
  return counts;
}

}  // namespace eqvi
