#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "eqvi/bench.hpp"
#include "eqvi/mdp.hpp"

namespace fixtures {

// s0 -> s1 -> s0 deterministically, c = (1, 0), gamma = 0.5.
inline eqvi::Mdp two_cycle() { return eqvi::Mdp(2, 1, 0.5, {1.0, 0.0}, {0.0, 1.0, 1.0, 0.0}); }

// One state, self-loop, c = (1, 2), gamma = 0.5.
inline eqvi::Mdp two_action() { return eqvi::Mdp(1, 2, 0.5, {1.0, 2.0}, {1.0, 1.0}); }

inline eqvi::Mdp self_loop(double cost, double gamma) { return eqvi::Mdp(1, 1, gamma, {cost}, {1.0}); }

inline eqvi::Mdp random_mdp(std::size_t states, std::size_t actions, std::uint64_t seed, double gamma = 0.9) {
  return eqvi::generate_random_mdp(states, actions, gamma, seed);
}

// Deterministic kernel: action a from s moves to (s + a + 1) mod S.
inline eqvi::Mdp shift_mdp(std::size_t states, std::size_t actions, double gamma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> cost(states * actions);
  std::vector<double> kernel(states * actions * states, 0.0);
  for (std::size_t s = 0; s < states; ++s)
    for (std::size_t a = 0; a < actions; ++a) {
      cost[s * actions + a] = u(rng);
      kernel[(s * actions + a) * states + (s + a + 1) % states] = 1.0;
    }
  return eqvi::Mdp(states, actions, gamma, std::move(cost), std::move(kernel));
}

inline eqvi::QTable random_q(std::size_t states, std::size_t actions, std::mt19937_64& rng, double lo = -5.0,
                             double hi = 5.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  eqvi::QTable q(states, actions);
  for (auto& x : q.values()) x = u(rng);
  return q;
}

}  // namespace fixtures
