#include <doctest.h>

#include <cmath>
#include <vector>

#include "eqvi/error.hpp"
#include "eqvi/noise.hpp"
#include "eqvi/stats.hpp"
#include "fixtures.hpp"

using namespace eqvi;

TEST_CASE("stream derivation is pinned") {
  // Reference values from an independent re-implementation of the derivation.
  CHECK(NoiseStream(42).uniform(StreamLabel::kernel_samples, 0, 0, 0, 0) == 0.24820202399404345);
  CHECK(NoiseStream(42).uniform(StreamLabel::kernel_samples, 7, 3, 1, 5) == 0.02691672014434321);
  CHECK(NoiseStream(0).uniform(StreamLabel::transition, -3, 1, 0, 0) == 0.929738941750001);
  CHECK(NoiseStream(42).split(9).uniform(StreamLabel::kernel_samples, 0, 0, 0, 0) == 0.0015903434377518844);
}

TEST_CASE("open uniforms stay away from zero") {
  const NoiseStream s(1);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = s.open_uniform(StreamLabel::generator, 0, 0, 0, i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("psi follows the half-open inverse CDF") {
  const Mdp m(2, 1, 0.5, {0, 0}, {0.3, 0.7, 0.0, 1.0});
  CHECK(psi(m, 0, 0, 0.2) == 0);
  CHECK(psi(m, 0, 0, 0.3) == 1);
  CHECK(psi(m, 0, 0, 0.0) == 0);
  CHECK(psi(m, 0, 0, 1.0) == 1);
  for (double xi : {0.0, 0.1, 0.5, 0.999, 1.0}) CHECK(psi(m, 1, 0, xi) == 1);
  CHECK_THROWS_AS(psi(m, 0, 0, -0.01), DomainError);
  CHECK_THROWS_AS(psi(m, 0, 0, 1.01), DomainError);

  const Mdp tail(3, 1, 0.5, {0, 0, 0}, {0.5, 0.5, 0.0, 1, 0, 0, 1, 0, 0});
  CHECK(psi(tail, 0, 0, 1.0) == 1);
}

TEST_CASE("psi pushforward matches the kernel row") {
  const Mdp m = fixtures::random_mdp(6, 2, 21);
  const NoiseStream s(5);
  const std::size_t draws = 100000;
  const double tol = std::sqrt(std::log(2.0 / 0.001) / (2.0 * draws));
  for (std::size_t a = 0; a < 2; ++a) {
    std::vector<double> freq(6, 0.0);
    for (std::size_t i = 0; i < draws; ++i) freq[psi(m, 3, a, s.uniform(StreamLabel::kernel_samples, 0, 3, a, i))] += 1.0;
    for (std::size_t t = 0; t < 6; ++t) CHECK(std::abs(freq[t] / draws - m.prob(3, a, t)) <= tol);
  }
}

TEST_CASE("noise blocks") {
  const NoiseStream s(77);
  const NoiseBlock a = draw_noise_block(s, 4, 5, 3, 2);
  const NoiseBlock b = draw_noise_block(s, 4, 5, 3, 2);
  const NoiseBlock c = draw_noise_block(s, 5, 5, 3, 2);
  CHECK(a.all().size() == 30);
  CHECK(std::equal(a.all().begin(), a.all().end(), b.all().begin()));
  CHECK_FALSE(std::equal(a.all().begin(), a.all().end(), c.all().begin()));
  CHECK_THROWS_AS(draw_noise_block(s, 0, 0, 3, 2), DomainError);
}

TEST_CASE("noise block moments") {
  const NoiseStream s(2026);
  const NoiseBlock block = draw_noise_block(s, 0, 1000, 100, 10);
  const auto all = block.all();
  double mean = 0.0;
  for (double x : all) mean += x;
  mean /= static_cast<double>(all.size());
  CHECK(all.size() == 1000000);
  CHECK(std::abs(mean - 0.5) <= 0.002);

  // Consecutive iterations are uncorrelated.
  const NoiseBlock next = draw_noise_block(s, 1, 1000, 100, 10);
  double cov = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) cov += (all[i] - 0.5) * (next.all()[i] - 0.5);
  cov /= static_cast<double>(all.size());
  CHECK(std::abs(cov) <= 3.0 / 12.0 / std::sqrt(1e6));
}

TEST_CASE("empirical kernel counts psi outcomes") {
  const Mdp m(2, 1, 0.5, {0, 0}, {0.5, 0.5, 0.5, 0.5});
  const NoiseBlock block(2, 1, 4, {0.1, 0.6, 0.7, 0.2, 0.9, 0.9, 0.9, 0.9});
  const EmpiricalKernel k = empirical_kernel(m, block, 4);
  CHECK(k.prob(0, 0, 0) == 0.5);
  CHECK(k.prob(0, 0, 1) == 0.5);
  CHECK(k.prob(1, 0, 1) == 1.0);
  CHECK(k.sample(0, 0, 0.49) == 0);
  CHECK(k.sample(0, 0, 0.5) == 1);
  CHECK(k.sample(1, 0, 0.0) == 1);
  CHECK_THROWS_AS(empirical_kernel(m, block, 3), StructuralError);
}

TEST_CASE("deterministic kernels are reproduced exactly") {
  const Mdp d = fixtures::shift_mdp(5, 2, 0.8, 1);
  const NoiseStream s(3);
  for (std::int64_t k = 0; k < 5; ++k) {
    const EmpiricalKernel e = empirical_kernel(d, draw_noise_block(s, k, 9, 5, 2), 9);
    for (std::size_t st = 0; st < 5; ++st)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t t = 0; t < 5; ++t) CHECK(e.prob(st, a, t) == d.prob(st, a, t));
  }
}

TEST_CASE("empirical rows agree with the block-based kernel") {
  const Mdp m = fixtures::random_mdp(4, 2, 9);
  const NoiseStream s(10);
  const EmpiricalKernel e = empirical_kernel(m, draw_noise_block(s, 3, 25, 4, 2), 25);
  for (std::size_t st = 0; st < 4; ++st)
    for (std::size_t a = 0; a < 2; ++a) {
      const auto row = empirical_row(m, s, 3, st, a, 25);
      for (std::size_t t = 0; t < 4; ++t) CHECK(row[t] == e.count(st, a, t));
    }
}

TEST_CASE("Hoeffding bound on a large empirical row") {
  const Mdp m = fixtures::random_mdp(5, 1, 33);
  const std::size_t n = 100000;
  const double tol = std::sqrt(std::log(2.0 / 0.001) / (2.0 * n));
  int exceed = 0;
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto row = empirical_row(m, NoiseStream(seed), 0, 2, 0, n);
    double worst = 0.0;
    for (std::size_t t = 0; t < 5; ++t)
      worst = std::max(worst, std::abs(static_cast<double>(row[t]) / n - m.prob(2, 0, t)));
    if (worst > tol) ++exceed;
  }
  // Each seed exceeds with probability at most 5 * 0.001.
  CHECK(exceed <= 1);
}

TEST_CASE("empirical kernel is unbiased") {
  const Mdp m = fixtures::random_mdp(4, 2, 14);
  const NoiseStream s(15);
  const std::size_t blocks = 200;
  const std::size_t n = 5;
  std::vector<double> sum(4 * 2 * 4, 0.0), sq(sum.size(), 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const EmpiricalKernel e = empirical_kernel(m, draw_noise_block(s, static_cast<std::int64_t>(b), n, 4, 2), n);
    for (std::size_t i = 0; i < sum.size(); ++i) {
      const double p = e.prob(i / 8, (i / 4) % 2, i % 4);
      sum[i] += p;
      sq[i] += p * p;
    }
  }
  int outside = 0;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double mean = sum[i] / blocks;
    const double var = (sq[i] / blocks - mean * mean) * blocks / (blocks - 1.0);
    const double se = std::sqrt(var / blocks);
    const double p = m.prob(i / 8, (i / 4) % 2, i % 4);
    if (std::abs(mean - p) > 3.0 * se + 1e-15) ++outside;
  }
  // 32 entries at 3 standard errors: more than two misses has probability below 1e-3.
  CHECK(outside <= 2);
}
