#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "copmix/copula.hpp"
#include "copmix/errors.hpp"
#include "copmix/noise.hpp"
#include "copmix/rng.hpp"
#include "support.hpp"

using namespace copmix;
using namespace copmix_test;

namespace {

double grid_gap(const GridCopula& a, const GridCopula& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.masses().size(); ++i)
    worst = std::max(worst, std::abs(a.masses()[i] - b.masses()[i]));
  return worst;
}

std::vector<Distribution1D> uniform_pair() {
  return {Distribution1D::uniform(0, 1), Distribution1D::uniform(0, 1)};
}

}  // namespace

TEST_CASE("distribution factories validate their parameters") {
  CHECK_THROWS_AS(Distribution1D::uniform(1.0, 1.0), ParameterError);
  CHECK_THROWS_AS(Distribution1D::uniform(2.0, 1.0), ParameterError);
  CHECK_THROWS_AS(Distribution1D::normal(0.0, 0.0), ParameterError);
  CHECK_THROWS_AS(Distribution1D::normal(0.0, -1.0), ParameterError);
  CHECK_THROWS_AS(Distribution1D::point_mass(std::numeric_limits<double>::infinity()),
                  ParameterError);
  CHECK_THROWS_AS(Distribution1D::empirical({}), ParameterError);
  CHECK_THROWS_AS(Distribution1D::empirical({1.0, std::nan("")}), ParameterError);
  CHECK_THROWS_AS(Distribution1D::table({0.0}, {0.0}), ParameterError);
  CHECK_THROWS_AS(Distribution1D::table({0.0, 0.0}, {0.0, 1.0}), ParameterError);
}

TEST_CASE("uniform distribution") {
  const Distribution1D u = Distribution1D::uniform(-1, 3);
  CHECK(u.cdf(-2) == 0.0);
  CHECK(u.cdf(1) == doctest::Approx(0.5));
  CHECK(u.cdf(5) == 1.0);
  CHECK(u.quantile(0.25) == doctest::Approx(0.0));
  CHECK(u.lo() == -1.0);
  CHECK(u.hi() == 3.0);
  CHECK_THROWS_AS(u.quantile(1.5), ParameterError);
}

TEST_CASE("normal distribution cdf and quantile agree") {
  const Distribution1D n = Distribution1D::normal(2.0, 0.5);
  CHECK(n.cdf(2.0) == doctest::Approx(0.5).epsilon(1e-14));
  // standard 97.5% point scaled and shifted
  CHECK(n.quantile(0.975) == doctest::Approx(2.0 + 0.5 * 1.959963984540054).epsilon(1e-9));
  for (double p : {0.01, 0.2, 0.5, 0.77, 0.999})
    CHECK(n.cdf(n.quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  CHECK(n.lo() < n.quantile(1e-8));
  CHECK(n.hi() > n.quantile(1.0 - 1e-8));
}

TEST_CASE("point mass distribution") {
  const Distribution1D d = Distribution1D::point_mass(1.5);
  CHECK(d.cdf(1.4) == 0.0);
  CHECK(d.cdf(1.5) == 1.0);
  CHECK(d.quantile(0.3) == 1.5);
  CHECK(d.lo() == 1.5);
  CHECK(d.hi() == 1.5);
}

TEST_CASE("empirical distribution sorts and steps") {
  const Distribution1D e = Distribution1D::empirical({3.0, 1.0, 2.0});
  CHECK(e.knots() == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(e.cdf(0.5) == 0.0);
  CHECK(e.cdf(1.0) == doctest::Approx(1.0 / 3));
  CHECK(e.cdf(2.5) == doctest::Approx(2.0 / 3));
  CHECK(e.cdf(3.0) == 1.0);
  CHECK(e.quantile(0.0) == 1.0);
  CHECK(e.quantile(0.5) == 2.0);
  CHECK(e.quantile(1.0) == 3.0);
}

TEST_CASE("table distribution interpolates and left-inverts") {
  const Distribution1D t = Distribution1D::table({0.0, 1.0, 2.0}, {0.0, 0.5, 1.0});
  CHECK(t.cdf(-1.0) == 0.0);
  CHECK(t.cdf(0.5) == doctest::Approx(0.25));
  CHECK(t.cdf(1.5) == doctest::Approx(0.75));
  CHECK(t.cdf(3.0) == 1.0);
  CHECK(t.quantile(0.25) == doctest::Approx(0.5));
  CHECK(t.quantile(1.0) == doctest::Approx(2.0));
}

TEST_CASE("shifting a distribution moves support and cdf") {
  const Distribution1D u = Distribution1D::uniform(0, 1).shifted(2.0);
  CHECK(u.kind() == Distribution1D::Kind::Uniform);
  CHECK(u.lo() == doctest::Approx(2.0));
  CHECK(u.cdf(2.5) == doctest::Approx(0.5));
  const Distribution1D e = Distribution1D::empirical({1.0, 2.0}).shifted(0.5);
  CHECK(e.knots() == std::vector<double>{1.5, 2.5});
}

TEST_CASE("sampling is deterministic and respects the law") {
  const Distribution1D u = Distribution1D::uniform(0, 2);
  Rng a(5, 0), b(5, 0);
  double mean = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double x = u.sample(a);
    CHECK(x == u.sample(b));
    CHECK(x >= 0.0);
    CHECK(x <= 2.0);
    mean += x;
  }
  CHECK(mean / 4000 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sum with a point mass is an exact shift") {
  const Distribution1D s =
      sum_cdf(Distribution1D::uniform(0, 1), Distribution1D::point_mass(2.0));
  CHECK(s.kind() == Distribution1D::Kind::Uniform);
  CHECK(s.cdf(2.5) == doctest::Approx(0.5));
  const Distribution1D r =
      sum_cdf(Distribution1D::point_mass(-1.0), Distribution1D::uniform(0, 1));
  CHECK(r.cdf(-0.75) == doctest::Approx(0.25));
}

TEST_CASE("sum of two uniforms is triangular") {
  const Distribution1D s = sum_cdf(Distribution1D::uniform(0, 1), Distribution1D::uniform(0, 1));
  CHECK(s.cdf(1.0) == doctest::Approx(0.5).epsilon(5e-6));
  CHECK(s.cdf(0.5) == doctest::Approx(0.125).epsilon(5e-6));
  CHECK(s.cdf(1.5) == doctest::Approx(0.875).epsilon(5e-6));
  CHECK(s.cdf(-0.1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.cdf(2.1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sum of two normals matches the convolved normal") {
  const Distribution1D s = sum_cdf(Distribution1D::normal(0, 1), Distribution1D::normal(1, 1));
  const Distribution1D ref = Distribution1D::normal(1, std::sqrt(2.0));
  for (double x : {-2.0, -0.5, 1.0, 2.5, 4.0})
    CHECK(s.cdf(x) == doctest::Approx(ref.cdf(x)).epsilon(1e-5));
}

TEST_CASE("sum against an empirical factor averages shifted cdfs") {
  const Distribution1D s =
      sum_cdf(Distribution1D::uniform(0, 1), Distribution1D::empirical({0.0, 1.0}));
  CHECK(s.cdf(1.0) == doctest::Approx(0.5).epsilon(2e-6));
  CHECK(s.cdf(0.5) == doctest::Approx(0.25).epsilon(2e-6));
  CHECK(s.cdf(1.75) == doctest::Approx(0.875).epsilon(2e-6));
}

TEST_CASE("independent noise keeps independence") {
  const std::vector<Distribution1D> noises{Distribution1D::normal(0, 0.3),
                                           Distribution1D::uniform(-0.2, 0.2)};
  const GridCopula g = noisy_copula_independent(CopulaExpr::pi(), uniform_pair(), noises, 8);
  CHECK(grid_gap(g, GridCopula(8)) < 1e-9);
  CHECK(validate(g).passed);
}

TEST_CASE("point-mass noise is a no-op on the copula") {
  const std::vector<Distribution1D> noises{Distribution1D::point_mass(3.0)};
  const GridCopula g =
      noisy_copula_independent(CopulaExpr::mardia(0.4, 0.1), uniform_pair(), noises, 8);
  CHECK(grid_gap(g, discretize(CopulaExpr::mardia(0.4, 0.1), 8)) < 1e-12);
}

TEST_CASE("no noise components reduces to plain discretization") {
  const GridCopula g = noisy_copula_independent(CopulaExpr::m(), uniform_pair(), {}, 6);
  CHECK(grid_gap(g, discretize(CopulaExpr::m(), 6)) == 0.0);
}

TEST_CASE("independent noise genuinely weakens comonotone dependence") {
  const std::vector<Distribution1D> noises{Distribution1D::uniform(0, 0.5),
                                           Distribution1D::uniform(0, 0.5)};
  const GridCopula g = noisy_copula_independent(CopulaExpr::m(), uniform_pair(), noises, 8);
  CHECK(validate(g, 1e-8).passed);
  CHECK(GridCopula::cdf_distance(g, m_grid(8)) > 0.01);
  CHECK(GridCopula::cdf_distance(g, GridCopula(8)) > 0.01);
  // degraded but still positively dependent: mass above the independent level
  double diag = 0.0;
  for (int i = 0; i < 8; ++i) diag += g.mass(i, i);
  CHECK(diag > 1.5 / 8);
}

TEST_CASE("empirical noise runs through the discrete quadrature path") {
  const std::vector<Distribution1D> noises{Distribution1D::empirical({-0.1, 0.0, 0.1})};
  const GridCopula g = noisy_copula_independent(CopulaExpr::pi(), uniform_pair(), noises, 6);
  CHECK(grid_gap(g, GridCopula(6)) < 1e-9);
}

TEST_CASE("common shock on both components preserves the upper bound") {
  const GridCopula g =
      noisy_copula_common(CopulaExpr::m(), uniform_pair(), Distribution1D::normal(0, 1), 2, 8);
  CHECK(grid_gap(g, m_grid(8)) < 1e-9);
}

TEST_CASE("common shock with s = 0 reduces to plain discretization") {
  const GridCopula g =
      noisy_copula_common(CopulaExpr::w(), uniform_pair(), Distribution1D::normal(0, 1), 0, 6);
  CHECK(grid_gap(g, discretize(CopulaExpr::w(), 6)) == 0.0);
}

TEST_CASE("one-sided shock perturbs an asymmetric amount") {
  const GridCopula g =
      noisy_copula_common(CopulaExpr::m(), uniform_pair(), Distribution1D::uniform(0, 1), 1, 8);
  CHECK(validate(g, 1e-8).passed);
  const double off = GridCopula::cdf_distance(g, m_grid(8));
  CHECK(off > 0.01);
  CHECK(off < 0.25);
}

TEST_CASE("bivariate noise interface validates shapes") {
  const auto margs = uniform_pair();
  const Distribution1D z = Distribution1D::normal(0, 1);
  CHECK_THROWS_AS(noisy_copula_independent(CopulaExpr::pi(), {z}, {}, 4), ParameterError);
  CHECK_THROWS_AS(noisy_copula_independent(CopulaExpr::pi(), margs, {z, z, z}, 4),
                  ParameterError);
  CHECK_THROWS_AS(noisy_copula_common(CopulaExpr::pi(), margs, z, 3, 4), ParameterError);
  CHECK_THROWS_AS(noisy_copula_common(CopulaExpr::pi(), margs, z, -1, 4), ParameterError);
  CHECK_THROWS_AS(noisy_copula_independent(CopulaExpr::pi(), margs, {}, 0), ParameterError);
}

TEST_CASE("trivariate mixture cdf") {
  CHECK_THROWS_AS(Copula3(1.5), ParameterError);
  CHECK_THROWS_AS(Copula3(-0.1), ParameterError);
  const Copula3 top(1.0);
  CHECK(top.cdf(0.2, 0.5, 0.3) == doctest::Approx(0.2));
  const Copula3 indep(0.0);
  CHECK(indep.cdf(0.2, 0.5, 0.3) == doctest::Approx(0.03));
  const Copula3 mix(0.4);
  CHECK(mix.cdf(0.5, 0.5, 0.5) == doctest::Approx(0.4 * 0.5 + 0.6 * 0.125));
}

TEST_CASE("trivariate common shock keeps the diagonal concentrated") {
  const std::vector<Distribution1D> margs(3, Distribution1D::uniform(0, 1));
  const Grid3 g = noisy_copula_common3(Copula3(1.0), margs, Distribution1D::normal(0, 0.5), 3, 4);
  CHECK(g.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
  for (int i = 0; i < 4; ++i) CHECK(g.mass(i, i, i) == doctest::Approx(0.25).epsilon(1e-9));
  for (double side : g.margin(0)) CHECK(side == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("trivariate independent noise keeps independence") {
  const std::vector<Distribution1D> margs(3, Distribution1D::uniform(0, 1));
  const std::vector<Distribution1D> noises{Distribution1D::uniform(0, 0.2)};
  const Grid3 g = noisy_copula_independent3(Copula3(0.0), margs, noises, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) CHECK(g.mass(i, j, k) == doctest::Approx(1.0 / 64).epsilon(1e-9));
}

TEST_CASE("trivariate mixed weight stays a proper distribution under noise") {
  const std::vector<Distribution1D> margs(3, Distribution1D::uniform(0, 1));
  const Grid3 g =
      noisy_copula_common3(Copula3(0.5), margs, Distribution1D::uniform(-0.3, 0.3), 2, 4);
  CHECK(g.total_mass() == doctest::Approx(1.0).epsilon(1e-8));
  for (int axis = 0; axis < 3; ++axis)
    for (double side : g.margin(axis)) CHECK(side == doctest::Approx(0.25).epsilon(1e-8));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) CHECK(g.mass(i, j, k) > -1e-9);
}

TEST_CASE("trivariate interface validates shapes") {
  const std::vector<Distribution1D> margs(3, Distribution1D::uniform(0, 1));
  const Distribution1D z = Distribution1D::normal(0, 1);
  CHECK_THROWS_AS(noisy_copula_independent3(Copula3(0.5), {z, z}, {}, 4), ParameterError);
  CHECK_THROWS_AS(noisy_copula_independent3(Copula3(0.5), margs, {z, z, z, z}, 4),
                  ParameterError);
  CHECK_THROWS_AS(noisy_copula_common3(Copula3(0.5), margs, z, 4, 4), ParameterError);
}

TEST_CASE("bivariate permutation swaps or copies") {
  const GridCopula g = fixed_grid4();
  const GridCopula same = apply_permutation(g, {0, 1});
  CHECK(grid_gap(same, g) == 0.0);
  const GridCopula swapped = apply_permutation(g, {1, 0});
  CHECK(grid_gap(swapped, g.transpose()) == 0.0);
  CHECK_THROWS_AS(apply_permutation(g, {0, 0}), ParameterError);
  CHECK_THROWS_AS(apply_permutation(g, {0, 2}), ParameterError);
  CHECK_THROWS_AS(apply_permutation(g, {0, 1, 2}), ParameterError);
}

TEST_CASE("trivariate permutation reindexes axes") {
  Grid3 g(2);
  g.at(0, 0, 1) = 1.0;
  const Grid3 p = apply_permutation(g, {2, 1, 0});
  CHECK(p.mass(1, 0, 0) == 1.0);
  CHECK_THROWS_AS(apply_permutation(g, std::vector<int>{0, 1}), ParameterError);
  CHECK_THROWS_AS(apply_permutation(g, std::vector<int>{0, 1, 1}), ParameterError);
}

TEST_CASE("empirical checkerboard needs enough samples") {
  std::vector<std::array<double, 2>> tiny(100, {0.5, 0.5});
  CHECK_THROWS_AS(empirical_copula(tiny, 4), SampleSizeError);
  std::vector<std::array<double, 3>> tiny3(100, {0.5, 0.5, 0.5});
  CHECK_THROWS_AS(empirical_copula3(tiny3, 4), SampleSizeError);
}

TEST_CASE("empirical checkerboard of comonotone data is diagonal") {
  std::vector<std::array<double, 2>> samples;
  Rng rng(7, 0);
  for (int i = 0; i < 400; ++i) {
    const double x = rng.uniform();
    samples.push_back({x, 2 * x + 1});
  }
  const GridCopula g = empirical_copula(samples, 4);
  CHECK(validate(g).passed);
  CHECK(grid_gap(g, m_grid(4)) < 1e-12);
}

TEST_CASE("empirical checkerboard of independent data approaches uniform") {
  std::vector<std::array<double, 2>> samples;
  Rng rng(8, 0);
  for (int i = 0; i < 4000; ++i) samples.push_back({rng.uniform(), rng.uniform()});
  const GridCopula g = empirical_copula(samples, 4);
  CHECK(validate(g).passed);
  CHECK(GridCopula::cdf_distance(g, GridCopula(4)) < 0.05);
}

TEST_CASE("trivariate empirical checkerboard has exact uniform margins") {
  std::vector<std::array<double, 3>> samples;
  Rng rng(9, 0);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform();
    samples.push_back({x, rng.uniform(), 1 - x});
  }
  const Grid3 g = empirical_copula3(samples, 4);
  CHECK(g.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  for (int axis = 0; axis < 3; ++axis)
    for (double side : g.margin(axis)) CHECK(side == doctest::Approx(0.25).epsilon(1e-12));
  // coordinates 1 and 3 are countermonotone: collapsing the middle margin
  // must concentrate mass on the antidiagonal
  const GridCopula flat = g.collapse_middle();
  CHECK(grid_gap(flat, w_grid(4)) < 1e-12);
}

TEST_CASE("noise spec dispatcher routes and validates") {
  const auto margs = uniform_pair();
  NoiseSpec spec;
  spec.mode = NoiseSpec::Mode::Independent;
  spec.s = 2;
  spec.dists = {Distribution1D::uniform(-0.1, 0.1)};
  CHECK_THROWS_AS(apply_noise(CopulaExpr::pi(), margs, spec, 4), ParameterError);

  spec.dists.push_back(Distribution1D::uniform(-0.1, 0.1));
  const GridCopula indep = apply_noise(CopulaExpr::pi(), margs, spec, 6);
  CHECK(grid_gap(indep, GridCopula(6)) < 1e-9);

  NoiseSpec common;
  common.mode = NoiseSpec::Mode::Common;
  common.s = 2;
  common.dists = {Distribution1D::normal(0, 1), Distribution1D::normal(0, 1)};
  CHECK_THROWS_AS(apply_noise(CopulaExpr::m(), margs, common, 4), ParameterError);
  common.dists.pop_back();
  const GridCopula shocked = apply_noise(CopulaExpr::m(), margs, common, 8);
  CHECK(grid_gap(shocked, m_grid(8)) < 1e-9);

  NoiseSpec oversized;
  oversized.mode = NoiseSpec::Mode::Independent;
  oversized.s = 3;
  oversized.dists = std::vector<Distribution1D>(3, Distribution1D::normal(0, 1));
  CHECK_THROWS_AS(apply_noise(CopulaExpr::pi(), margs, oversized, 4), ParameterError);
}

TEST_CASE("noise spec permutation is applied to the result") {
  NoiseSpec spec;
  spec.mode = NoiseSpec::Mode::Independent;
  spec.s = 0;
  spec.permutation = std::vector<int>{1, 0};
  const GridCopula g =
      apply_noise(CopulaExpr::grid(fixed_grid4()), uniform_pair(), spec, 4);
  CHECK(grid_gap(g, fixed_grid4().transpose()) == 0.0);
}
