#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eqvi/mdp.hpp"

namespace eqvi {

/// Sub-stream labels. Each label is an independent family of variates.
enum class StreamLabel : std::uint64_t {
  kernel_samples = 1,  // xi^k_i(s,a): samples behind the empirical kernels
  transition = 2,      // nu_k(s,a): draws from an empirical kernel
  action = 3,          // nu~_k(s): randomized policy draws
  selection = 4,       // asynchronous pair selection
  generator = 5,       // random MDP instances
  chain = 6,           // dominating-chain simulation
};

/// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t absorb(std::uint64_t h, std::uint64_t x) { return mix64(h ^ mix64(x + kGolden)); }

/// Counter-based splittable source of uniform variates.
///
/// Every variate is a pure function of (master seed, label, k, s, a, i):
///
///     root = mix64(seed + G)
///     key  = absorb(absorb(absorb(absorb(root, label), k), s), a)
///     bits = absorb(key, i)
///     u    = (bits >> 11) * 2^-53                      in [0, 1)
///
/// with absorb(h, x) = mix64(h ^ mix64(x + G)), G = 0x9e3779b97f4a7c15 and
/// mix64 the SplitMix64 finalizer. Signed indices are reinterpreted as
/// two's-complement 64-bit words. split(c) yields the stream whose seed is
/// absorb(absorb(root, 0x5eed), c).
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t master_seed) : seed_(master_seed), root_(mix64(master_seed + kGolden)) {}

  std::uint64_t seed() const { return seed_; }
  NoiseStream split(std::uint64_t child) const { return NoiseStream(absorb(absorb(root_, 0x5eedULL), child)); }

  std::uint64_t key(StreamLabel label, std::int64_t k, std::uint64_t s, std::uint64_t a) const {
    std::uint64_t h = absorb(root_, static_cast<std::uint64_t>(label));
    h = absorb(h, static_cast<std::uint64_t>(k));
    h = absorb(h, s);
    return absorb(h, a);
  }
  static double uniform_from_key(std::uint64_t key, std::uint64_t i) {
    return static_cast<double>(absorb(key, i) >> 11) * 0x1.0p-53;
  }
  static double open_uniform_from_key(std::uint64_t key, std::uint64_t i) {
    return (static_cast<double>(absorb(key, i) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on [0,1).
  double uniform(StreamLabel label, std::int64_t k, std::uint64_t s, std::uint64_t a, std::uint64_t i) const {
    return uniform_from_key(key(label, k, s, a), i);
  }
  /// Uniform on the open interval (0,1).
  double open_uniform(StreamLabel label, std::int64_t k, std::uint64_t s, std::uint64_t a, std::uint64_t i) const {
    return open_uniform_from_key(key(label, k, s, a), i);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t root_;
};

/// psi(s, a, xi): inverse-CDF simulation function. Returns the smallest s'
/// with xi < F(s'); xi = 1 (or rounding past the last partial sum) maps to the
/// largest s' with positive mass. Throws DomainError for xi outside [0,1].
State psi(const Mdp& mdp, State s, Action a, double xi);

/// Unchecked psi for hot loops; xi must already be in [0,1].
inline State psi_unchecked(const Mdp& mdp, State s, Action a, double xi) {
  const auto f = mdp.cdf_row(s, a);
  // Branchless upper bound: count of partial sums <= xi.
  const double* base = f.data();
  std::size_t len = f.size();
  while (len > 1) {
    const std::size_t half = len / 2;
    base += static_cast<std::size_t>(base[half - 1] <= xi) * half;
    len -= half;
  }
  const std::size_t idx = static_cast<std::size_t>(base - f.data()) + static_cast<std::size_t>(*base <= xi);
  return idx < f.size() ? idx : mdp.last_support(s, a);
}

/// One iteration's worth of noise: n uniforms per state-action pair.
class NoiseBlock {
 public:
  NoiseBlock(std::size_t num_states, std::size_t num_actions, std::size_t n, std::vector<double> samples);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t samples_per_pair() const { return n_; }
  std::span<const double> samples(State s, Action a) const {
    return {samples_.data() + (s * num_actions_ + a) * n_, n_};
  }
  std::span<const double> all() const { return samples_; }

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::size_t n_;
  std::vector<double> samples_;
};

/// xi^k_i(s,a) for all (s,a) and i < n, drawn from `label` at iteration k.
NoiseBlock draw_noise_block(const NoiseStream& stream, std::int64_t k, std::size_t n, std::size_t num_states,
                            std::size_t num_actions, StreamLabel label = StreamLabel::kernel_samples);

/// Frequency kernel p^(s'|s,a) = count/n built from n samples per pair.
/// Stores integer counts, so every row sums to exactly one.
class EmpiricalKernel {
 public:
  EmpiricalKernel(std::size_t num_states, std::size_t num_actions, std::size_t n, std::vector<std::uint32_t> counts);
  /// Wraps the exact kernel of a deterministic MDP (n = 1).
  static EmpiricalKernel from_deterministic(const Mdp& mdp);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t samples_per_pair() const { return n_; }
  std::uint32_t count(State s, Action a, State next) const {
    return counts_[(s * num_actions_ + a) * num_states_ + next];
  }
  double prob(State s, Action a, State next) const {
    return static_cast<double>(count(s, a, next)) / static_cast<double>(n_);
  }
  std::span<const std::uint32_t> counts(State s, Action a) const {
    return {counts_.data() + (s * num_actions_ + a) * num_states_, num_states_};
  }
  /// Inverse-CDF draw from row (s,a): the smallest s' with u*n < cumulative count.
  State sample(State s, Action a, double u) const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::size_t n_;
  std::vector<std::uint32_t> counts_;
};

/// Counts of psi outcomes over the block's samples.
EmpiricalKernel empirical_kernel(const Mdp& mdp, const NoiseBlock& block, std::size_t n);

/// Empirical counts for one row only, from n samples keyed by (label, k, s, a).
std::vector<std::uint32_t> empirical_row(const Mdp& mdp, const NoiseStream& stream, std::int64_t k, State s,
                                         Action a, std::size_t n);

/// Inverse-CDF draw from a count row with total n.
State sample_counts(std::span<const std::uint32_t> counts, std::size_t n, double u);

}  // namespace eqvi
