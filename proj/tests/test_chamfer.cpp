#include <doctest.h>

#include <cmath>

#include "cei/chamfer.hpp"
#include "cei/errors.hpp"
#include "support.hpp"

using namespace cei;
using namespace cei::testing;

TEST_CASE("smoothed distance") {
  const Vec3 a(0, 0, 0), b(3, 4, 0);
  CHECK(smoothed_distance(a, b, 0.0) == 5.0);
  CHECK(smoothed_distance(a, a, 0.1) == 0.0);
  CHECK(smoothed_distance(a, b, 1e-9) == doctest::Approx(5.0 - 1e-9).epsilon(1e-14));
  CHECK(pair_cost(a, Vec3::UnitZ(), b, Vec3::UnitZ(), {0.5, 0.0}) == 4.5);
}

TEST_CASE("dcd equals the double-loop oracle and is symmetric") {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const WorldFuncRep x = random_rep(rng, 1 + rng.index(8));
    const WorldFuncRep y = random_rep(rng, 1 + rng.index(8));
    const double lambda = rng.uniform(0.0, 1.0);
    const double eps = trial % 2 ? 0.0 : 1e-3;
    const MetricConfig cfg{lambda, eps};
    CHECK(std::abs(dcd(x, y, cfg) - oracle_dcd(x, y, lambda, eps)) <= 1e-12);
    CHECK(dcd(x, y, cfg) == dcd(y, x, cfg));
    CHECK(functional_similarity(x, y, cfg) == -dcd(x, y, cfg));
  }
}

TEST_CASE("dcd of a set with itself is -2 lambda") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const WorldFuncRep x = random_rep(rng, 1 + rng.index(40));
    CHECK(std::abs(dcd(x, x, {0.5, 0.0}) + 1.0) <= 1e-12);
    CHECK(std::abs(dcd(x, x, {0.25, 0.0}) + 0.5) <= 1e-12);
  }
}

TEST_CASE("lambda zero is the plain chamfer distance") {
  Rng rng(3);
  const WorldFuncRep x = random_rep(rng, 6), y = random_rep(rng, 5);
  WorldFuncRep flipped = y;
  flipped.directions = -flipped.directions;
  CHECK(dcd(x, y, {0.0, 0.0}) == dcd(x, flipped, {0.0, 0.0}));
  CHECK(dcd(x, y, {0.5, 0.0}) != dcd(x, flipped, {0.5, 0.0}));
}

TEST_CASE("matching is joint over distance and direction") {
  // Nearest point faces away; a farther one is aligned and wins.
  WorldFuncRep x, y;
  x.points = Eigen::Matrix3Xd::Zero(3, 1);
  x.directions = Vec3::UnitZ();
  y.points.resize(3, 2);
  y.directions.resize(3, 2);
  y.points.col(0) = Vec3(0.01, 0, 0);
  y.directions.col(0) = -Vec3::UnitZ();
  y.points.col(1) = Vec3(0.2, 0, 0);
  y.directions.col(1) = Vec3::UnitZ();
  const auto m = match_directional(x, y, {0.5, 0.0});
  CHECK(m.index[0] == 1);
  CHECK(m.cost[0] == doctest::Approx(0.2 - 0.5));
}

TEST_CASE("ties resolve to the lowest index") {
  WorldFuncRep x, y;
  x.points = Eigen::Matrix3Xd::Zero(3, 1);
  x.directions = Vec3::UnitX();
  y.points.resize(3, 3);
  y.directions.resize(3, 3);
  for (int k = 0; k < 3; ++k) {
    y.points.col(k) = Vec3(0, 0.1, 0);
    y.directions.col(k) = Vec3::UnitX();
  }
  y.points.col(0) = Vec3(0, 0.5, 0);
  CHECK(match_directional(x, y, {0.5, 0.0}, MatchStrategy::brute_force).index[0] == 1);
  CHECK(match_directional(x, y, {0.5, 0.0}, MatchStrategy::grid).index[0] == 1);
}

TEST_CASE("grid matching equals brute force") {
  Rng rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    const WorldFuncRep x = random_rep(rng, 300 + rng.index(400), 0.2);
    const WorldFuncRep y = random_rep(rng, 600 + rng.index(400), 0.2);
    for (double lambda : {0.0, 0.5, 2.0}) {
      const MetricConfig cfg{lambda, trial % 2 ? 1e-9 : 0.0};
      const auto brute = match_directional(x, y, cfg, MatchStrategy::brute_force);
      const auto grid = match_directional(x, y, cfg, MatchStrategy::grid);
      CHECK(brute.index == grid.index);
      CHECK(brute.cost == grid.cost);
    }
  }
  // Clustered reference with a far outlier.
  WorldFuncRep y = random_rep(rng, 700, 0.01);
  y.points.col(3) = Vec3(5, 5, 5);
  const WorldFuncRep x = random_rep(rng, 50, 1.0);
  const auto a = match_directional(x, y, {0.5, 0.0}, MatchStrategy::brute_force);
  const auto b = match_directional(x, y, {0.5, 0.0}, MatchStrategy::grid);
  CHECK(a.index == b.index);
  CHECK(a.cost == b.cost);
}

TEST_CASE("automatic strategy agrees with the oracle on large sets") {
  Rng rng(5);
  const WorldFuncRep x = random_rep(rng, 530, 0.1), y = random_rep(rng, 520, 0.1);
  CHECK(std::abs(dcd(x, y, {0.5, 0.0}) - oracle_dcd(x, y, 0.5, 0.0)) <= 1e-12);
}

TEST_CASE("dcd cotangent matches finite differences") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const WorldFuncRep x = random_rep(rng, 2 + rng.index(7));
    const WorldFuncRep y = random_rep(rng, 2 + rng.index(7));
    const MetricConfig cfg{0.5, 1e-9};
    const DcdGradient g = dcd_cotangent(x, y, cfg);
    CHECK(g.value == dcd(x, y, cfg));
    const double h = 1e-7;
    for (Eigen::Index i = 0; i < y.points.cols(); ++i) {
      for (int c = 0; c < 3; ++c) {
        WorldFuncRep plus = y, minus = y;
        plus.points(c, i) += h;
        minus.points(c, i) -= h;
        const double fd = (dcd(x, plus, cfg) - dcd(x, minus, cfg)) / (2 * h);
        CHECK(std::abs(fd - g.cotangent.d_points(c, i)) <= 1e-5);
        plus = y;
        minus = y;
        plus.directions(c, i) += h;
        minus.directions(c, i) -= h;
        const double fdn = (dcd(x, plus, cfg) - dcd(x, minus, cfg)) / (2 * h);
        CHECK(std::abs(fdn - g.cotangent.d_directions(c, i)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("invalid inputs") {
  Rng rng(7);
  const WorldFuncRep x = random_rep(rng, 3);
  WorldFuncRep empty;
  empty.points.resize(3, 0);
  empty.directions.resize(3, 0);
  CHECK_THROWS_AS(dcd(x, empty, {}), DimensionError);
  CHECK_THROWS_AS(dcd(x, x, {-0.1, 0.0}), ValidationError);
  CHECK_THROWS_AS(dcd(x, x, {0.5, -1.0}), ValidationError);
}
