#include <doctest.h>

#include <cmath>

#include "copmix/errors.hpp"
#include "copmix/grid.hpp"
#include "support.hpp"

using namespace copmix;
using namespace copmix_test;

TEST_CASE("uniform grid is the independence checkerboard") {
  const GridCopula g(4);
  CHECK(g.m() == 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(g.mass(i, j) == doctest::Approx(1.0 / 16).epsilon(1e-15));
  CHECK(validate(g).passed);
  for (double u : {0.0, 0.25, 0.3, 0.7, 1.0})
    for (double v : {0.0, 0.5, 0.9, 1.0})
      CHECK(g.cdf(u, v) == doctest::Approx(u * v).epsilon(1e-14));
}

TEST_CASE("constructor rejects bad input") {
  CHECK_THROWS_AS(GridCopula(0), ParameterError);
  CHECK_THROWS_AS(GridCopula(2, {0.25, 0.25, 0.25}), ParameterError);
}

TEST_CASE("corner sums and cdf boundaries") {
  const GridCopula g = fixed_grid4();
  CHECK(g.corner(0, 0) == 0.0);
  CHECK(g.corner(4, 4) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g.corner(1, 1) == doctest::Approx(0.125));
  // copula axioms on the boundary
  for (double t : {0.1, 0.5, 0.85}) {
    CHECK(g.cdf(t, 1.0) == doctest::Approx(t).epsilon(1e-14));
    CHECK(g.cdf(1.0, t) == doctest::Approx(t).epsilon(1e-14));
    CHECK(g.cdf(t, 0.0) == 0.0);
    CHECK(g.cdf(0.0, t) == 0.0);
  }
  CHECK_THROWS_AS(g.cdf(-0.1, 0.5), ParameterError);
  CHECK_THROWS_AS(g.cdf(0.5, 1.4), ParameterError);
}

TEST_CASE("cdf is 2-increasing on random grids") {
  const GridCopula g = GridCopula::random(8, 77);
  Rng rng(5, 0);
  for (int k = 0; k < 200; ++k) {
    double u1 = rng.uniform(), u2 = rng.uniform();
    double v1 = rng.uniform(), v2 = rng.uniform();
    if (u1 > u2) std::swap(u1, u2);
    if (v1 > v2) std::swap(v1, v2);
    const double vol = g.cdf(u2, v2) - g.cdf(u1, v2) - g.cdf(u2, v1) + g.cdf(u1, v1);
    CHECK(vol >= -1e-12);
  }
}

TEST_CASE("conditional cdf and quantile invert each other") {
  const GridCopula g = fixed_grid4();
  Rng rng(9, 0);
  for (int k = 0; k < 300; ++k) {
    const double x = rng.uniform();
    const double p = rng.uniform();
    const double v = g.conditional_quantile(x, p);
    CHECK(g.conditional_cdf(x, v) == doctest::Approx(p).epsilon(1e-10));
  }
  // rows with a zero cell: the kernel jumps over it
  CHECK(g.conditional_quantile(0.1, 0.0) == 0.0);
  CHECK(g.conditional_quantile(0.1, 1.0) == doctest::Approx(0.75));
}

TEST_CASE("conditional cdf of the diagonal grid is a step at the current cell") {
  const GridCopula g = m_grid(4);
  CHECK(g.conditional_cdf(0.3, 0.2) == 0.0);
  CHECK(g.conditional_cdf(0.3, 0.26) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(g.conditional_cdf(0.3, 0.5) == doctest::Approx(1.0));
  const double v = g.conditional_quantile(0.3, 0.5);
  CHECK(v > 0.25);
  CHECK(v < 0.5);
}

TEST_CASE("refine and coarsen are exact inverses") {
  const GridCopula g = fixed_grid4();
  const GridCopula fine = g.refine(4);
  CHECK(fine.m() == 16);
  CHECK(GridCopula::cdf_distance(g.refine(1), g) == 0.0);
  // refined cdf agrees at the original corners
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j)
      CHECK(fine.corner(4 * i, 4 * j) == doctest::Approx(g.corner(i, j)).epsilon(1e-14));
  const GridCopula back = fine.coarsen(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(back.mass(i, j) == doctest::Approx(g.mass(i, j)).epsilon(1e-13));
  CHECK_THROWS_AS(g.coarsen(3), ParameterError);
}

TEST_CASE("transpose flips the roles of the coordinates") {
  const GridCopula g = GridCopula::random(6, 3);
  const GridCopula t = g.transpose();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) CHECK(t.mass(i, j) == g.mass(j, i));
  CHECK(GridCopula::cdf_distance(t.transpose(), g) == 0.0);
}

TEST_CASE("cdf_distance basics") {
  const GridCopula a = m_grid(8);
  const GridCopula b(8);
  CHECK(GridCopula::cdf_distance(a, a) == 0.0);
  CHECK(GridCopula::cdf_distance(a, b) == doctest::Approx(0.25));  // at (1/2,1/2)
  CHECK_THROWS_AS(GridCopula::cdf_distance(a, GridCopula(4)), ResolutionError);
}

TEST_CASE("random grids validate and are reproducible") {
  const GridCopula a = GridCopula::random(16, 123);
  const GridCopula b = GridCopula::random(16, 123);
  const GridCopula c = GridCopula::random(16, 124);
  CHECK(validate(a).passed);
  CHECK(a.min_density() > 0.0);
  CHECK(a.masses() == b.masses());
  CHECK(GridCopula::cdf_distance(a, c) > 0.0);
}

TEST_CASE("validate reports specific violations") {
  // negative cell
  GridCopula neg(2, {0.5, -0.25, 0.25, 0.5});
  const auto r1 = validate(neg);
  CHECK(!r1.passed);
  CHECK(r1.worst_cell < 0.0);
  // margins off
  GridCopula lop(2, {0.5, 0.25, 0.125, 0.125});
  const auto r2 = validate(lop);
  CHECK(!r2.passed);
  CHECK(r2.worst_marginal > 0.1);
  // loose tolerance can accept small drift
  GridCopula drift(2, {0.25 + 1e-12, 0.25, 0.25, 0.25});
  CHECK(validate(drift).passed);
  CHECK(!validate(drift, 1e-15).passed);
}

TEST_CASE("grid3 storage, margins and permutation") {
  Grid3 g(2);
  CHECK(g.total_mass() == 0.0);
  g.at(0, 0, 0) = 0.25;
  g.at(0, 1, 1) = 0.25;
  g.at(1, 0, 1) = 0.25;
  g.at(1, 1, 0) = 0.25;
  CHECK(g.total_mass() == doctest::Approx(1.0));
  for (int axis = 0; axis < 3; ++axis) {
    const auto marg = g.margin(axis);
    REQUIRE(marg.size() == 2);
    CHECK(marg[0] == doctest::Approx(0.5));
    CHECK(marg[1] == doctest::Approx(0.5));
  }
  const GridCopula xz = g.collapse_middle();
  CHECK(xz.mass(0, 0) == doctest::Approx(0.25));
  CHECK(xz.mass(0, 1) == doctest::Approx(0.25));

  const Grid3 p = g.permute({2, 1, 0});
  CHECK(p.mass(1, 0, 0) == doctest::Approx(g.mass(0, 0, 1)));
  const Grid3 id = g.permute({0, 1, 2});
  CHECK(id.masses() == g.masses());
}
