#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "eqvi/coupling.hpp"
#include "eqvi/dp.hpp"
#include "eqvi/error.hpp"
#include "eqvi/stats.hpp"
#include "fixtures.hpp"

using namespace eqvi;

namespace {

PolicySequence greedy_for(const Mdp& m) { return PolicySequence(greedy_policy(solve_q_iteration(m, 1e-10).values)); }

// Three states, period two: 0 -> 1 -> 0, and 2 -> 2.
Mdp permutation_mdp() { return Mdp(2, 1, 0.9, {0.5, 0.5}, {0, 1, 1, 0}); }

}  // namespace

TEST_CASE("forward simulation") {
  const Mdp d = fixtures::shift_mdp(5, 2, 0.9, 1);
  const auto kernels = empirical_kernel_sequence(d, NoiseStream(1), 3, 8);
  const PolicySequence pol(StationaryPolicy::deterministic(2, {1, 0, 1, 0, 1}));
  const SimPath a = forward_simulate(d, kernels, pol, {0, 0}, 8, NoiseStream(2));
  const SimPath b = forward_simulate(d, kernels, pol, {0, 0}, 8, NoiseStream(99));
  CHECK(a.steps == b.steps);
  CHECK(a.steps.size() == 9);
  CHECK(a.at(1).state == 1);
  CHECK(forward_simulate(d, kernels, pol, {2, 1}, 1, NoiseStream(3)).steps.size() == 2);
  CHECK_THROWS_AS(forward_simulate(d, kernels, pol, {0, 0}, 9, NoiseStream(2)), DomainError);
  CHECK_THROWS_AS(forward_simulate(d, kernels, pol, {0, 0}, 0, NoiseStream(2)), DomainError);
}

TEST_CASE("forward transitions follow the first empirical kernel") {
  const Mdp m = fixtures::random_mdp(3, 2, 5);
  const auto kernels = empirical_kernel_sequence(m, NoiseStream(6), 20, 1);
  const PolicySequence pol(StationaryPolicy::uniform(3, 2));
  const NoiseStream nu(7);
  const std::size_t paths = 10000;
  std::vector<double> freq(3, 0.0);
  for (std::size_t p = 0; p < paths; ++p) freq[forward_simulate(m, kernels, pol, {1, 1}, 1, nu.split(p)).at(1).state] += 1;
  const double tol = std::sqrt(std::log(2.0 / 0.001) / (2.0 * paths));
  for (std::size_t t = 0; t < 3; ++t) CHECK(std::abs(freq[t] / paths - kernels[0].prob(1, 1, t)) <= tol);
}

TEST_CASE("backward simulation") {
  const Mdp m = fixtures::random_mdp(4, 2, 8);
  const auto kernels = empirical_kernel_sequence(m, NoiseStream(9), 5, 12);
  const PolicySequence pol(StationaryPolicy::deterministic(2, {0, 1, 1, 0}));
  const NoiseStream nu(10);

  const SimPath one = backward_simulate(m, kernels, pol, {2, 1}, 1, nu);
  const SimPath fwd = forward_simulate(m, kernels, pol, {2, 1}, 1, nu);
  CHECK(one.start_index == -1);
  CHECK(one.at(0) == fwd.at(1));

  // Shared per-(time, state, action) noise: once paths meet they stay merged.
  std::vector<SimPath> paths;
  for (State s = 0; s < 4; ++s) paths.push_back(backward_simulate(m, kernels, pol, {s, pol.at(12).sample(s, 0.0)}, 12, nu));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) {
      bool met = false;
      for (std::int64_t t = -12; t <= 0; ++t) {
        if (paths[i].at(t) == paths[j].at(t)) met = true;
        if (met) CHECK(paths[i].at(t) == paths[j].at(t));
      }
    }
  CHECK_THROWS_AS(backward_simulate(m, kernels, pol, {0, 0}, 0, nu), DomainError);
  CHECK_THROWS_AS(backward_simulate(m, kernels, pol, {0, 0}, 13, nu), DomainError);
}

TEST_CASE("backward law equals forward law under reversed kernels") {
  const Mdp m = fixtures::random_mdp(4, 2, 11);
  const std::int64_t k0 = 6;
  const auto kernels = empirical_kernel_sequence(m, NoiseStream(12), 4, k0);
  std::vector<EmpiricalKernel> reversed(kernels.rbegin(), kernels.rend());
  const PolicySequence pol(StationaryPolicy::uniform(4, 2));
  const NoiseStream back_noise(13);
  const NoiseStream fwd_noise(14);
  const std::size_t paths = 10000;
  std::vector<double> back_end(4, 0.0), fwd_end(4, 0.0), back_mid(4, 0.0), fwd_mid(4, 0.0);
  for (std::size_t p = 0; p < paths; ++p) {
    const SimPath b = backward_simulate(m, kernels, pol, {0, 1}, k0, back_noise.split(p));
    const SimPath f = forward_simulate(m, reversed, pol, {0, 1}, k0, fwd_noise.split(p));
    back_end[b.at(0).state] += 1;
    fwd_end[f.at(k0).state] += 1;
    back_mid[b.at(-3).state] += 1;
    fwd_mid[f.at(3).state] += 1;
  }
  CHECK(stats::chi_square_homogeneity(back_end, fwd_end).p_value > 0.01);
  CHECK(stats::chi_square_homogeneity(back_mid, fwd_mid).p_value > 0.01);
}

TEST_CASE("coupling from the past") {
  const Mdp single = fixtures::self_loop(1.0, 0.5);
  const auto trivial = cftp_coalescence(single, PolicySequence(StationaryPolicy::uniform(1, 1)), NoiseStream(1), 2,
                                        16, 5);
  for (auto t : trivial.times) CHECK(t == 0);

  const Mdp m = fixtures::random_mdp(3, 2, 15);
  const auto report = cftp_coalescence(m, greedy_for(m), NoiseStream(16), 5, 1 << 14, 100);
  CHECK(report.censored_count == 0);
  CHECK(report.trials == 100);
  for (auto t : report.times) CHECK(t >= 1);

  const Mdp perm = permutation_mdp();
  const auto stuck = cftp_coalescence(perm, PolicySequence(StationaryPolicy::uniform(2, 1)), NoiseStream(17), 3, 1 << 10, 10);
  CHECK(stuck.censored_count == 10);
  CHECK(stuck.max == 0);
  CHECK_THROWS_AS(cftp_coalescence(m, greedy_for(m), NoiseStream(1), 5, 0, 1), DomainError);

  const auto j = nlohmann::json::parse(to_json(report));
  CHECK(j["times"].size() == 100);
  CHECK(j["censored_count"] == 0);
}

TEST_CASE("coalescence depth is monotone") {
  const Mdp m = fixtures::random_mdp(4, 2, 18);
  const PolicySequence pol = greedy_for(m);
  for (std::uint64_t t = 0; t < 30; ++t) {
    const NoiseStream trial = NoiseStream(19).split(t);
    std::int64_t first = 0;
    for (std::int64_t depth = 1; depth <= 256; ++depth)
      if (coalesces_from(m, pol, trial, 3, depth)) {
        first = depth;
        break;
      }
    REQUIRE(first > 0);
    for (std::int64_t deeper : {first + 1, first + 5, 2 * first + 3}) CHECK(coalesces_from(m, pol, trial, 3, deeper));
  }
}

TEST_CASE("hitting times") {
  const Mdp m = fixtures::random_mdp(5, 2, 20);
  const PolicySequence pol = greedy_for(m);
  const auto zero = estimate_hitting_time(m, pol, 2, 2, 10, 100, 4, NoiseStream(1));
  for (auto t : zero.times) CHECK(t == 0);

  const Mdp cycle = fixtures::two_cycle();
  const auto one = estimate_hitting_time(cycle, PolicySequence(StationaryPolicy::uniform(2, 1)), 0, 1, 50, 100, 3,
                                         NoiseStream(2));
  for (auto t : one.times) CHECK(t == 1);

  const auto small = estimate_hitting_time(m, pol, 0, 4, 500, 10000, 4, NoiseStream(3));
  const auto large = estimate_hitting_time(m, pol, 0, 4, 1000, 10000, 4, NoiseStream(4));
  CHECK(small.censored_count == 0);
  CHECK(std::abs(small.mean - large.mean) <= 0.2 * large.mean);
}

TEST_CASE("coupling times") {
  const Mdp m = fixtures::random_mdp(4, 2, 21);
  const PolicySequence pol = greedy_for(m);
  const auto same = estimate_coupling_time(m, pol, 1, 1, 20, 100, 3, NoiseStream(1));
  for (auto t : same.times) CHECK(t == 0);

  const auto never = estimate_coupling_time(fixtures::two_cycle(), PolicySequence(StationaryPolicy::uniform(2, 1)), 0,
                                            1, 20, 500, 3, NoiseStream(2));
  CHECK(never.censored_count == 20);

  const auto tail = estimate_coupling_time(m, pol, 0, 3, 2000, 10000, 3, NoiseStream(3));
  CHECK(tail.censored_count == 0);
  const auto fit = survival_log_slope(tail);
  CHECK(fit.points >= 3);
  CHECK(fit.slope + 1.96 * fit.slope_se < 0.0);

  const auto shared = estimate_coupling_time(m, pol, 0, 3, 500, 10000, 3, NoiseStream(3), CouplingMode::shared_noise);
  CHECK(shared.kind == "coupling_shared");
  CHECK(shared.censored_count == 0);
}

TEST_CASE("coupling-time law does not depend on the start time") {
  const Mdp m = fixtures::random_mdp(4, 2, 22);
  const PolicySequence pol = greedy_for(m);
  const auto a = estimate_coupling_time(m, pol, 0, 2, 1000, 10000, 3, NoiseStream(5), CouplingMode::independent, 0);
  const auto b = estimate_coupling_time(m, pol, 0, 2, 1000, 10000, 3, NoiseStream(6), CouplingMode::independent, 57);
  std::vector<double> ta(a.times.begin(), a.times.end()), tb(b.times.begin(), b.times.end());
  CHECK(stats::ks_two_sample(ta, tb).p_value > 0.05);
}

TEST_CASE("forward-backward equivalence, exact route") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Mdp m = fixtures::random_mdp(5, 2, 30 + seed);
    std::mt19937_64 rng(seed);
    const QTable h = fixtures::random_q(5, 2, rng, 0.0, 3.0);
    for (std::int64_t k : {1, 5, 20}) {
      const auto r = verify_forward_backward(m, h, k, NoiseStream(seed), 3, ForwardBackwardMode::exact_dp);
      CHECK(r.passed);
      CHECK(r.max_abs_diff <= 1e-9);
    }
  }
  // k = 1 is the one-step identity c + gamma p^_0 min h.
  const Mdp m = fixtures::random_mdp(4, 2, 40);
  const QTable h(4, 2, 1.0);
  const auto r = verify_forward_backward(m, h, 1, NoiseStream(1), 2, ForwardBackwardMode::exact_dp);
  const auto k0 = empirical_kernel_sequence(m, NoiseStream(1), 2, 1);
  const QTable one = empirical_q_operator(m, h, k0[0]);
  for (const auto& e : r.entries) CHECK(std::abs(e.backward - one(e.pair.state, e.pair.action)) <= 1e-12);
  CHECK_THROWS_AS(verify_forward_backward(m, h, 0, NoiseStream(1), 2, ForwardBackwardMode::exact_dp), DomainError);
}

TEST_CASE("forward-backward on a deterministic MDP matches exact QVI") {
  const Mdp d = fixtures::shift_mdp(5, 2, 0.8, 7);
  const QTable h(5, 2, 0.0);
  const auto r = verify_forward_backward(d, h, 7, NoiseStream(3), 2, ForwardBackwardMode::exact_dp);
  QTable q = h;
  for (int j = 0; j < 7; ++j) q = q_operator_apply(d, q);
  for (const auto& e : r.entries) CHECK(std::abs(e.backward - q(e.pair.state, e.pair.action)) <= 1e-12);
  const auto mc = verify_forward_backward(d, h, 7, NoiseStream(3), 2, ForwardBackwardMode::monte_carlo, 20);
  CHECK(mc.passed);
  for (const auto& e : mc.entries) CHECK(e.std_error <= 1e-12);
}

TEST_CASE("forward-backward, Monte Carlo route") {
  const Mdp m = fixtures::random_mdp(5, 2, 50);
  const QTable h(5, 2, 0.0);
  const auto r = verify_forward_backward(m, h, 4, NoiseStream(51), 3, ForwardBackwardMode::monte_carlo, 4000);
  CHECK(r.entries.size() == 10);
  CHECK(r.passed);
  const auto one = verify_forward_backward(m, h, 1, NoiseStream(52), 3, ForwardBackwardMode::monte_carlo, 4000);
  CHECK(one.passed);
}
