#include <doctest.h>

#include <random>
#include <vector>

#include "eqvi/kernels.hpp"
#include "eqvi/noise.hpp"
#include "fixtures.hpp"

using namespace eqvi;

TEST_CASE("serial and OpenMP expected backups agree bit for bit") {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Mdp m = fixtures::random_mdp(40, 4, seed);
    std::vector<double> v(40);
    for (auto& x : v) x = std::uniform_real_distribution<double>(0, 10)(rng);
    std::vector<double> a(160), b(160);
    kernels::expected_backup_serial(m, v, a);
    kernels::expected_backup_omp(m, v, b);
    CHECK(a == b);
  }
}

TEST_CASE("serial and OpenMP empirical backups agree bit for bit") {
  std::mt19937_64 rng(4);
  const NoiseStream stream(8);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Mdp m = fixtures::random_mdp(30, 3, seed);
    std::vector<double> v(30);
    for (auto& x : v) x = std::uniform_real_distribution<double>(0, 10)(rng);
    const NoiseBlock block = draw_noise_block(stream, static_cast<std::int64_t>(seed), 7, 30, 3);
    std::vector<double> a(90), b(90);
    kernels::empirical_backup_serial(m, v, block, a);
    kernels::empirical_backup_omp(m, v, block, b);
    CHECK(a == b);
  }
}

TEST_CASE("expected backup matches a direct double loop") {
  const Mdp m = fixtures::random_mdp(6, 2, 12);
  const std::vector<double> v{1, 2, 3, 4, 5, 6};
  std::vector<double> out(12);
  kernels::expected_backup(Exec::serial, m, v, out);
  for (std::size_t s = 0; s < 6; ++s)
    for (std::size_t a = 0; a < 2; ++a) {
      double acc = 0.0;
      for (std::size_t t = 0; t < 6; ++t) acc += m.prob(s, a, t) * v[t];
      CHECK(out[s * 2 + a] == doctest::Approx(m.cost(s, a) + m.gamma() * acc).epsilon(1e-14));
    }
}
