#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "soqdyn/grid.hpp"
#include "soqdyn/rng.hpp"

using namespace soqdyn;
using Catch::Approx;

TEST_CASE("make_grid spacing and momentum axis") {
  auto g = make_grid(8, 4.0, 1.0);
  CHECK(g->dx() == Approx(1.0));
  CHECK(g->extent_p() == Approx(std::numbers::pi));
  CHECK(g->p(0) == Approx(-std::numbers::pi));
  CHECK(g->x(0) == Approx(-4.0));
  CHECK(g->x(4) == Approx(0.0));

  auto g2 = make_grid(8, 4.0, 2.0);
  for (int i = 0; i < 8; ++i) CHECK(g2->p(i) == 2.0 * g->p(i));

  auto g3 = make_grid(512, 40.0, 1.0);
  CHECK(g3->dx() == Approx(0.15625));
  CHECK(g3->extent_p() == Approx(20.106).epsilon(1e-3));
}

TEST_CASE("make_grid rejects bad arguments") {
  CHECK_THROWS_AS(make_grid(6, 4.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(48, 4.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(64, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(64, 4.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(64, 4.0, -2.0), std::invalid_argument);
}

TEST_CASE("transform of a constant field is a delta at p = 0") {
  auto g = make_grid(32, 5.0, 1.0);
  ScalarField f = ScalarField::from_fn(g, Space::Position,
                                       [](double, double) { return Complex{1.0, 0.0}; });
  ScalarField phi = transform(f, Transform::ToMomentum);
  const int zero = g->n() / 2;
  for (int i = 0; i < g->n(); ++i)
    for (int j = 0; j < g->n(); ++j) {
      if (i == zero && j == zero) continue;
      CHECK(std::abs(phi.at(i, j)) < 1e-12 * std::abs(phi.at(zero, zero)));
    }
  CHECK(std::abs(phi.at(zero, zero)) > 0.0);
}

TEST_CASE("centered Gaussian is self-transform under the h convention") {
  for (double h : {1.0, 2.5}) {
    auto g = make_grid(128, 12.0 * std::sqrt(h), h);
    ScalarField f = ScalarField::from_fn(g, Space::Position, [&](double x, double y) {
      return Complex{std::exp(-(x * x + y * y) / (2.0 * h)), 0.0};
    });
    ScalarField phi = transform(f, Transform::ToMomentum);
    double max_err = 0.0;
    for (int i = 0; i < g->n(); ++i)
      for (int j = 0; j < g->n(); ++j) {
        const double expect = std::exp(-(g->p(i) * g->p(i) + g->p(j) * g->p(j)) / (2.0 * h));
        max_err = std::max(max_err, std::abs(phi.at(i, j) - Complex{expect, 0.0}));
      }
    CHECK(max_err < 1e-10);
  }
}

TEST_CASE("random fields: Parseval and round trip") {
  auto g = make_grid(64, 7.0, 1.7);
  SplitMix64 rng(42);
  for (int rep = 0; rep < 100; ++rep) {
    ScalarField f(g, Space::Position);
    for (auto& c : f.values()) c = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double n0 = f.norm2();
    ScalarField phi = transform(f, Transform::ToMomentum);
    CHECK(std::abs(phi.norm2() - n0) < 1e-12 * n0);
    ScalarField back = transform(phi, Transform::ToPosition);
    double max_err = 0.0;
    for (std::size_t i = 0; i < back.values().size(); ++i)
      max_err = std::max(max_err, std::abs(back.values()[i] - f.values()[i]));
    CHECK(max_err < 1e-12);
  }
}

TEST_CASE("transform rejects space mismatches") {
  auto g = make_grid(16, 3.0, 1.0);
  ScalarField f(g, Space::Position);
  CHECK_THROWS_AS(transform(f, Transform::ToPosition), std::invalid_argument);
  ScalarField phi(g, Space::Momentum);
  CHECK_THROWS_AS(transform(phi, Transform::ToMomentum), std::invalid_argument);
}

TEST_CASE("norm2 scaling and spinor composition") {
  auto g = make_grid(32, 6.0, 1.0);
  ScalarField f = ScalarField::from_fn(g, Space::Position, [](double x, double y) {
    return Complex{std::exp(-(x * x + y * y) / 2.0), 0.0};
  });
  f.normalize();
  CHECK(f.norm2() == Approx(1.0));
  ScalarField f2 = f;
  f2.scale(2.0);
  CHECK(f2.norm2() == Approx(4.0));

  SpinorField sp(f, f2);
  CHECK(sp.norm2() == Approx(5.0));
  CHECK_THROWS_AS(SpinorField(f, ScalarField(g, Space::Momentum)), std::invalid_argument);
}

TEST_CASE("grid sizing rule balances the accessible shell") {
  // v = 30 isotropic at E = -192: shell radius 22.7 in position, 52.7 outer
  // in momentum.
  const double r = accessible_position_radius(30.0, -192.0);
  const double p = accessible_momentum_radius(30.0, -192.0);
  CHECK(r == Approx(std::sqrt(516.0)));
  CHECK(p == Approx(52.7158).epsilon(1e-4));

  GridSizing s = plan_grid_extents(512, 4.0, 30.0, -192.0);
  CHECK(s.extent_x * s.extent_p == Approx(std::numbers::pi * 4.0 * 512 / 2.0));
  CHECK(s.extent_x >= r);
  CHECK(s.extent_p >= p);
  CHECK(s.fits);

  GridSizing tight = plan_grid_extents(128, 1.0, 30.0, -192.0);
  CHECK_FALSE(tight.fits);

  const int n_min = min_grid_points(4.0, 30.0, -192.0);
  CHECK(plan_grid_extents(n_min, 4.0, 30.0, -192.0).fits);
  CHECK_FALSE(plan_grid_extents(n_min / 2, 4.0, 30.0, -192.0).fits);
}

TEST_CASE("density dump round trip") {
  auto g = make_grid(16, 2.5, 1.25);
  std::vector<double> rho(g->size());
  SplitMix64 rng(7);
  for (auto& v : rho) v = rng.uniform();
  const std::string path =
      (std::filesystem::temp_directory_path() / "soqdyn_dump_test.dump").string();
  write_density(path, *g, Space::Momentum, rho);

  // Header is a single ASCII line with the advertised fields.
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("soqdyn-grid n=16 extent=2.5 h=1.25 space=mom", 0) == 0);

  DensityDump d = read_density(path);
  CHECK(d.grid->n() == 16);
  CHECK(d.grid->extent_x() == 2.5);
  CHECK(d.grid->h() == 1.25);
  CHECK(d.space == Space::Momentum);
  REQUIRE(d.values.size() == rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) CHECK(d.values[i] == rho[i]);
  std::filesystem::remove(path);
}
