#pragma once

// Sample-complexity closed forms in 50-digit decimal arithmetic.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "eqvi/complexity.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_dec_float_50;

inline bool close(double got, const Big& want, double rel = 1e-12) {
  const Big diff = abs(Big(got) - want);
  return diff <= Big(rel) * abs(want) || diff <= Big(1e-300);
}

// Ceiling with the same 1e-9 relative snap as the calculator.
inline std::int64_t big_ceil(const Big& x) {
  const Big r = round(x);
  if (abs(x - r) <= Big(1e-9) * abs(x)) return r.convert_to<std::int64_t>();
  return ceil(x).convert_to<std::int64_t>();
}

struct Values {
  Big kappa, eps_g, n_bound, p, q, mu_min, k_bound;
  std::int64_t eta, N;
  std::vector<Big> mu;
};

// Direct transcription of the closed forms, one displayed formula at a time.
// Inputs are converted from double exactly, so only evaluation error is measured.
inline Values evaluate(const eqvi::BoundInputs& in, std::optional<std::int64_t> n_override) {
  Values o;
  const Big e(in.epsilon), g(in.gamma), c(in.c_max), delta1(in.delta1), delta2(in.delta2);
  const std::size_t S = in.num_states, A = in.num_actions;
  const Big pairs = Big(S) * Big(A);
  o.kappa = c / (1 - g);
  o.eta = big_ceil(Big(2) / (1 - g));
  o.eps_g = e / Big(o.eta);
  o.N = big_ceil(o.kappa / o.eps_g);
  o.n_bound = o.kappa * o.kappa / (2 * o.eps_g * o.eps_g) * log(2 * pairs / delta1);
  const Big n = n_override ? Big(*n_override) : Big(big_ceil(o.n_bound));
  o.q = 2 * pairs * exp(-2 * pow(o.eps_g / g, 2) * n / (o.kappa * o.kappa));
  o.p = 1 - o.q;
  if (o.p <= 0) return o;
  o.mu.push_back(pow(o.p, Big(o.N - o.eta - 1)));
  for (std::int64_t i = o.eta + 1; i <= o.N - 1; ++i) o.mu.push_back(o.q * pow(o.p, Big(o.N - i - 1)));
  o.mu.push_back(o.q / o.p);
  o.mu_min = *std::min_element(o.mu.begin(), o.mu.end());
  o.k_bound = log(1 / (delta2 * o.mu_min));
  return o;
}

}  // namespace oracle
