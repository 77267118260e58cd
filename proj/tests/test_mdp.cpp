#include <doctest.h>

#include <cmath>
#include <sstream>

#include "eqvi/error.hpp"
#include "eqvi/mdp.hpp"
#include "fixtures.hpp"

using namespace eqvi;

TEST_CASE("construction rejects broken invariants") {
  CHECK_THROWS_AS(Mdp(2, 1, 0.5, {1.0, 0.0}, {0.5, 0.4, 1.0, 0.0}), InvalidMdp);
  CHECK_THROWS_AS(Mdp(1, 1, 0.5, {-1.0}, {1.0}), InvalidMdp);
  CHECK_THROWS_AS(Mdp(1, 1, 1.0, {1.0}, {1.0}), InvalidMdp);
  CHECK_THROWS_AS(Mdp(1, 1, 0.0, {1.0}, {1.0}), InvalidMdp);
  CHECK_THROWS_AS(Mdp(2, 1, 0.5, {1.0, 0.0}, {1.5, -0.5, 1.0, 0.0}), InvalidMdp);
  CHECK_THROWS_AS(Mdp(2, 1, 0.5, {1.0}, {0.0, 1.0, 1.0, 0.0}), InvalidMdp);
  CHECK_THROWS_AS(Mdp(0, 1, 0.5, {}, {}), InvalidMdp);
  CHECK_NOTHROW(Mdp(2, 1, 0.5, {1.0, 0.0}, {0.5, 0.5 + 5e-13, 1.0, 0.0}));
}

TEST_CASE("derived quantities") {
  const Mdp m = fixtures::two_cycle();
  CHECK(m.max_cost() == 1.0);
  CHECK(m.kappa_star() == doctest::Approx(2.0));
  CHECK(m.is_deterministic());
  CHECK_FALSE(m.ergodic_hint());
  const Mdp r = fixtures::random_mdp(4, 2, 3);
  CHECK(r.ergodic_hint());
  CHECK_FALSE(r.is_deterministic());
  CHECK(m.last_support(0, 0) == 1);
  CHECK(m.cdf_row(1, 0)[0] == 1.0);
}

TEST_CASE("QTable row minima break ties toward the lowest action") {
  const QTable q = QTable::from_rows({{5.0, 5.0}, {3.0, 1.0}});
  CHECK(q.row_argmin(0) == 0);
  CHECK(q.row_argmin(1) == 1);
  CHECK(q.row_min(1) == 1.0);
  CHECK(q.minima().values()[0] == 5.0);
  CHECK_THROWS_AS(QTable::from_rows({{1.0}, {1.0, 2.0}}), StructuralError);
  CHECK_THROWS_AS(QTable(2, 1, std::vector<double>{1.0}), StructuralError);
}

TEST_CASE("sup norm helpers") {
  const std::vector<double> x{1.0, -3.0, 2.0};
  const std::vector<double> y{0.0, 0.0, 2.5};
  CHECK(sup_norm(x) == 3.0);
  CHECK(sup_distance(x, y) == 3.0);
}

TEST_CASE("policies") {
  const auto d = StationaryPolicy::deterministic(3, {2, 0});
  CHECK(d.is_deterministic());
  CHECK(d(0, 2) == 1.0);
  CHECK(d.sample(0, 0.999) == 2);
  const auto u = StationaryPolicy::uniform(1, 4);
  CHECK_FALSE(u.is_deterministic());
  CHECK(u.sample(0, 0.0) == 0);
  CHECK(u.sample(0, 0.26) == 1);
  CHECK(u.sample(0, 1.0) == 3);
  CHECK_THROWS_AS(StationaryPolicy(1, 2, {0.7, 0.7}), DomainError);

  const PolicySequence seq({StationaryPolicy::deterministic(2, {0}), StationaryPolicy::deterministic(2, {1})});
  CHECK(seq.at(0)(0, 0) == 1.0);
  CHECK(seq.at(1)(0, 1) == 1.0);
  CHECK(seq.at(7)(0, 1) == 1.0);
}

TEST_CASE("JSON round trip") {
  const Mdp m = fixtures::random_mdp(3, 2, 11);
  std::stringstream ss;
  write_mdp_json(m, ss);
  const Mdp back = read_mdp_json(ss);
  CHECK(back.num_states() == 3);
  CHECK(back.num_actions() == 2);
  CHECK(back.gamma() == m.gamma());
  for (std::size_t i = 0; i < m.kernel().size(); ++i) CHECK(back.kernel()[i] == m.kernel()[i]);
  for (std::size_t i = 0; i < m.costs().size(); ++i) CHECK(back.costs()[i] == m.costs()[i]);
}

TEST_CASE("JSON reader enforces the schema") {
  std::stringstream bad_rows(R"({"num_states":2,"num_actions":1,"gamma":0.5,"cost":[[1],[0]],
                                 "kernel":[[[0.6,0.6]],[[1,0]]]})");
  CHECK_THROWS_AS(read_mdp_json(bad_rows), InvalidMdp);
  std::stringstream bad_shape(R"({"num_states":2,"num_actions":1,"gamma":0.5,"cost":[[1]],
                                  "kernel":[[[0,1]],[[1,0]]]})");
  CHECK_THROWS_AS(read_mdp_json(bad_shape), InvalidMdp);
  std::stringstream missing(R"({"num_states":1,"num_actions":1,"cost":[[1]],"kernel":[[[1]]]})");
  CHECK_THROWS(read_mdp_json(missing));
}
