#include <doctest.h>

#include <cmath>
#include <optional>

#include "copmix/algebra.hpp"
#include "copmix/errors.hpp"
#include "support.hpp"

using namespace copmix;
using namespace copmix_test;

namespace {

FrechetCoeffs fc(double m, double w) { return {m, w, 1.0 - m - w}; }

bool coeffs_close(const FrechetCoeffs& a, const FrechetCoeffs& b, double tol = 1e-15) {
  return std::abs(a.coef_m - b.coef_m) <= tol && std::abs(a.coef_w - b.coef_w) <= tol &&
         std::abs(a.coef_pi - b.coef_pi) <= tol;
}

}  // namespace

TEST_CASE("product table on the closed family") {
  CHECK(coeffs_close(frechet_product(fc(1, 0), fc(1, 0)), fc(1, 0)));  // M*M = M
  CHECK(coeffs_close(frechet_product(fc(0, 1), fc(0, 1)), fc(1, 0)));  // W*W = M
  CHECK(coeffs_close(frechet_product(fc(1, 0), fc(0, 1)), fc(0, 1)));  // M*W = W
  CHECK(coeffs_close(frechet_product(fc(0, 1), fc(1, 0)), fc(0, 1)));  // W*M = W
  CHECK(coeffs_close(frechet_product(fc(0, 0), fc(1, 0)), fc(0, 0)));  // Pi absorbs
  CHECK(coeffs_close(frechet_product(fc(0.3, 0.2), fc(0, 0)), fc(0, 0)));

  // bilinear extension: a' = a1 a2 + b1 b2, b' = a1 b2 + b1 a2
  const FrechetCoeffs p = frechet_product(fc(0.3, 0.2), fc(0.4, 0.1));
  CHECK(p.coef_m == doctest::Approx(0.3 * 0.4 + 0.2 * 0.1).epsilon(1e-15));
  CHECK(p.coef_w == doctest::Approx(0.3 * 0.1 + 0.2 * 0.4).epsilon(1e-15));
  CHECK(p.coef_pi == doctest::Approx(1.0 - 0.14 - 0.11).epsilon(1e-14));
}

TEST_CASE("reduce_frechet folds symbolic structure to coordinates") {
  CHECK(coeffs_close(*reduce_frechet(CopulaExpr::mardia(0.3, 0.2)), fc(0.3, 0.2)));
  CHECK(coeffs_close(*reduce_frechet(CopulaExpr::perturb_pi(CopulaExpr::m(), 0.4)),
                     fc(0.6, 0.0)));
  CHECK(coeffs_close(*reduce_frechet(CopulaExpr::perturb_m(CopulaExpr::w(), 0.25)),
                     fc(0.25, 0.75)));
  const CopulaExpr conv = CopulaExpr::convex(
      {0.5, 0.3, 0.2}, {CopulaExpr::m(), CopulaExpr::w(), CopulaExpr::pi()});
  CHECK(coeffs_close(*reduce_frechet(conv), fc(0.5, 0.3)));
  // grids are outside the closed family
  CHECK(!reduce_frechet(CopulaExpr::grid(GridCopula::random(4, 1))).has_value());
  // fold powers reduce through the closed-form power
  const CopulaExpr pow = CopulaExpr::fold_power(CopulaExpr::mardia(0.3, 0.2), 3);
  const FrechetCoeffs expect = mardia_n_fold(0.3, 0.2, 3);
  CHECK(coeffs_close(*reduce_frechet(pow), expect, 1e-14));
}

TEST_CASE("from_frechet returns atoms at the corners") {
  CHECK(from_frechet(fc(1, 0)).kind() == CopulaExpr::Kind::M);
  CHECK(from_frechet(fc(0, 1)).kind() == CopulaExpr::Kind::W);
  CHECK(from_frechet(fc(0, 0)).kind() == CopulaExpr::Kind::Pi);
  const CopulaExpr c = from_frechet(fc(0.25, 0.25));
  CHECK(c.kind() == CopulaExpr::Kind::Mardia);
  CHECK(c.mardia_a() == doctest::Approx(0.25));
}

TEST_CASE("fold product has M as identity and Pi as absorber") {
  const CopulaExpr g = CopulaExpr::grid(GridCopula::random(8, 3));
  const CopulaExpr left = fold_product(CopulaExpr::m(), g);
  const CopulaExpr right = fold_product(g, CopulaExpr::m());
  CHECK(GridCopula::cdf_distance(discretize(left, 8), discretize(g, 8)) < 1e-12);
  CHECK(GridCopula::cdf_distance(discretize(right, 8), discretize(g, 8)) < 1e-12);
  CHECK(fold_product(CopulaExpr::pi(), g).kind() == CopulaExpr::Kind::Pi);
  CHECK(fold_product(g, CopulaExpr::pi()).kind() == CopulaExpr::Kind::Pi);
}

TEST_CASE("grid fold product: permutation grids compose exactly") {
  const GridCopula mw = fold_product_grid(m_grid(8), w_grid(8));
  CHECK(GridCopula::cdf_distance(mw, w_grid(8)) == 0.0);
  const GridCopula ww = fold_product_grid(w_grid(8), w_grid(8));
  CHECK(GridCopula::cdf_distance(ww, m_grid(8)) == 0.0);
  const GridCopula pp = fold_product_grid(GridCopula(8), GridCopula(8));
  CHECK(GridCopula::cdf_distance(pp, GridCopula(8)) < 1e-15);
}

TEST_CASE("grid fold product is associative and preserves margins") {
  const GridCopula a = GridCopula::random(16, 10);
  const GridCopula b = GridCopula::random(16, 11);
  const GridCopula c = GridCopula::random(16, 12);
  const GridCopula left = fold_product_grid(fold_product_grid(a, b), c);
  const GridCopula right = fold_product_grid(a, fold_product_grid(b, c));
  CHECK(GridCopula::cdf_distance(left, right) < 1e-13);
  CHECK(validate(left).passed);
}

TEST_CASE("fold product across resolutions requires divisibility") {
  const CopulaExpr a = CopulaExpr::grid(GridCopula::random(8, 1));
  const CopulaExpr b = CopulaExpr::grid(GridCopula::random(16, 2));
  const CopulaExpr ab = fold_product(a, b);
  CHECK(discretize(ab, 16).m() == 16);
  const CopulaExpr odd = CopulaExpr::grid(GridCopula::random(6, 3));
  CHECK_THROWS_AS(fold_product(b, odd), ResolutionError);
}

TEST_CASE("star product collapses to the fold product") {
  const CopulaExpr a = CopulaExpr::grid(GridCopula::random(8, 21));
  const CopulaExpr b = CopulaExpr::grid(GridCopula::random(8, 22));
  const Grid3 s = star_product(a, b, 8);
  CHECK(s.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  for (int axis = 0; axis < 3; ++axis)
    for (double mm : s.margin(axis)) CHECK(mm == doctest::Approx(0.125).epsilon(1e-10));
  const GridCopula collapsed = s.collapse_middle();
  const GridCopula folded = fold_product_grid(discretize(a, 8), discretize(b, 8));
  CHECK(GridCopula::cdf_distance(collapsed, folded) < 1e-13);
}

TEST_CASE("star product of symbolic atoms") {
  // M * M: all three states move together
  const Grid3 diag = star_product(CopulaExpr::m(), CopulaExpr::m(), 4);
  for (int i = 0; i < 4; ++i) CHECK(diag.mass(i, i, i) == doctest::Approx(0.25));
  // Pi * Pi: product measure
  const Grid3 ind = star_product(CopulaExpr::pi(), CopulaExpr::pi(), 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        CHECK(ind.mass(i, j, k) == doctest::Approx(1.0 / 64).epsilon(1e-12));
}

TEST_CASE("n_fold matches explicit iteration on grids") {
  const GridCopula g = GridCopula::random(16, 33);
  GridCopula iter = g;
  for (int k = 2; k <= 6; ++k) {
    iter = fold_product_grid(iter, g);
    const GridCopula fast = n_fold_grid(g, k);
    CHECK(GridCopula::cdf_distance(fast, iter) < 1e-12);
  }
  CHECK(GridCopula::cdf_distance(n_fold_grid(g, 1), g) == 0.0);
}

TEST_CASE("n_fold reduces symbolically on the closed family") {
  const CopulaExpr c = CopulaExpr::mardia(0.5, 0.3);
  const CopulaExpr c3 = n_fold(c, 3);
  const auto r = reduce_frechet(c3);
  REQUIRE(r.has_value());
  const FrechetCoeffs expect = mardia_n_fold(0.5, 0.3, 3);
  CHECK(coeffs_close(*r, expect, 1e-14));
}

TEST_CASE("convex_expand enumerates every ordered factor choice") {
  const std::vector<double> w{0.6, 0.4};
  const std::vector<CopulaExpr> comps{CopulaExpr::m(), CopulaExpr::pi()};
  const auto terms = convex_expand(w, comps, 3);
  CHECK(terms.size() == 8);
  double total = 0.0;
  for (const auto& t : terms) {
    CHECK(t.factors.size() == 3);
    double prod = 1.0;
    for (int f : t.factors) prod *= w[static_cast<std::size_t>(f)];
    CHECK(t.weight == doctest::Approx(prod).epsilon(1e-14));
    total += t.weight;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(convex_expand(w, comps, 30), BlowupError);
}

TEST_CASE("expansion weights reproduce the n-fold power") {
  // sum over ordered products of the closed family equals the power
  const std::vector<double> w{0.5, 0.2, 0.3};
  const std::vector<CopulaExpr> comps{CopulaExpr::m(), CopulaExpr::w(), CopulaExpr::pi()};
  const int n = 4;
  const auto terms = convex_expand(w, comps, n);
  FrechetCoeffs acc{0.0, 0.0, 0.0};
  for (const auto& t : terms) {
    FrechetCoeffs prod = *reduce_frechet(comps[static_cast<std::size_t>(t.factors[0])]);
    for (std::size_t i = 1; i < t.factors.size(); ++i)
      prod = frechet_product(
          prod, *reduce_frechet(comps[static_cast<std::size_t>(t.factors[i])]));
    acc.coef_m += t.weight * prod.coef_m;
    acc.coef_w += t.weight * prod.coef_w;
    acc.coef_pi += t.weight * prod.coef_pi;
  }
  const FrechetCoeffs direct = mardia_n_fold(0.5, 0.2, n);
  CHECK(coeffs_close(acc, direct, 1e-14));
}

TEST_CASE("mardia_n_fold closed form and domain") {
  const FrechetCoeffs f = mardia_n_fold(0.3, 0.2, 4);
  const double s = std::pow(0.5, 4), d = std::pow(0.1, 4);
  CHECK(f.coef_m == doctest::Approx((s + d) / 2).epsilon(1e-15));
  CHECK(f.coef_w == doctest::Approx((s - d) / 2).epsilon(1e-15));
  CHECK(f.coef_pi == doctest::Approx(1.0 - s).epsilon(1e-15));
  CHECK_THROWS_AS(mardia_n_fold(0.8, 0.4, 2), ParameterError);
  CHECK_THROWS_AS(mardia_n_fold(0.1, 0.1, 0), ParameterError);
}

TEST_CASE("mardia n-fold equals repeated symbolic folds at dyadic rationals") {
  // all arithmetic here is exact in binary floating point
  for (double a : {0.0, 0.25, 0.5})
    for (double b : {0.0, 0.25, 0.5})
      for (int n = 1; n <= 8; ++n) {
        FrechetCoeffs iter = fc(a, b);
        for (int k = 1; k < n; ++k) iter = frechet_product(iter, fc(a, b));
        const FrechetCoeffs closed = mardia_n_fold(a, b, n);
        CHECK(iter.coef_m == closed.coef_m);
        CHECK(iter.coef_w == closed.coef_w);
        CHECK(iter.coef_pi == doctest::Approx(closed.coef_pi).epsilon(1e-16));
      }
}

TEST_CASE("perturbation powers match numerically folded grids") {
  const GridCopula base = GridCopula::random(16, 55);
  const CopulaExpr cb = CopulaExpr::grid(base);
  const double theta = 0.35;
  for (int n : {1, 2, 4}) {
    // Pi family
    const CopulaExpr mix_pi = CopulaExpr::convex({1 - theta, theta}, {cb, CopulaExpr::pi()});
    const GridCopula direct_pi = n_fold_grid(discretize(mix_pi, 16), n);
    const GridCopula closed_pi = discretize(perturb_pi_n_fold(cb, theta, n), 16);
    CHECK(GridCopula::cdf_distance(direct_pi, closed_pi) < 1e-12);
    // M family
    const CopulaExpr mix_m = CopulaExpr::convex({1 - theta, theta}, {cb, CopulaExpr::m()});
    const GridCopula direct_m = n_fold_grid(discretize(mix_m, 16), n);
    const GridCopula closed_m = discretize(perturb_m_n_fold(cb, theta, n), 16);
    CHECK(GridCopula::cdf_distance(direct_m, closed_m) < 1e-11);
  }
}

TEST_CASE("perturb_m_n_fold cap") {
  CHECK_THROWS_AS(perturb_m_n_fold(CopulaExpr::pi(), 0.5, 80), BlowupError);
}

TEST_CASE("density floor propagates through powers") {
  for (std::uint64_t seed : {7ull, 8ull, 9ull}) {
    const GridCopula g = GridCopula::random(16, seed);
    for (int n : {1, 2, 5}) {
      const auto r = lemma_bound_check(g, n);
      CHECK(r.holds);
      CHECK(r.density_floor == doctest::Approx(g.min_density()));
      CHECK(r.power_floor >= std::pow(r.density_floor, n) - 1e-10);
    }
  }
}

TEST_CASE("limit classification covers all closed-family branches") {
  // interior: (a+b) < 1 contracts to independence
  CHECK(limit_classify(CopulaExpr::mardia(0.3, 0.2)).tag ==
        LimitClass::Tag::IndependencePi);
  // a = 1: stays at the upper bound
  CHECK(limit_classify(CopulaExpr::m()).tag == LimitClass::Tag::ComonotoneM);
  // b = 1: powers alternate, no limit
  const LimitClass alt = limit_classify(CopulaExpr::w());
  CHECK(alt.tag == LimitClass::Tag::Undefined);
  CHECK(!alt.diagnostic.empty());
  // a + b = 1, neither degenerate: averages the two bounds
  CHECK(limit_classify(CopulaExpr::mardia(0.5, 0.5)).tag == LimitClass::Tag::HalfMHalfW);
  CHECK(limit_classify(CopulaExpr::mardia(0.3, 0.7)).tag == LimitClass::Tag::HalfMHalfW);
}

TEST_CASE("perturbations classify through their structure") {
  const CopulaExpr base = CopulaExpr::grid(GridCopula::random(16, 4));
  CHECK(limit_classify(CopulaExpr::perturb_pi(base, 0.2)).tag ==
        LimitClass::Tag::IndependencePi);
  // theta = 0 keeps the base behaviour
  CHECK(limit_classify(CopulaExpr::perturb_pi(CopulaExpr::m(), 0.0)).tag ==
        LimitClass::Tag::ComonotoneM);
  CHECK(limit_classify(CopulaExpr::perturb_m(CopulaExpr::m(), 0.4)).tag ==
        LimitClass::Tag::ComonotoneM);
  // contaminating W with M breaks the period-2 alternation: the reduced
  // coefficients are (theta, 1-theta), an a+b = 1 interior point
  const LimitClass broken = limit_classify(CopulaExpr::perturb_m(CopulaExpr::w(), 0.4));
  CHECK(broken.tag == LimitClass::Tag::HalfMHalfW);
}

TEST_CASE("numeric classification converges on grids") {
  const CopulaExpr c = CopulaExpr::grid(discretize(CopulaExpr::mardia(0.3, 0.2), 32));
  const LimitClass lim = limit_classify(c);
  REQUIRE(lim.tag == LimitClass::Tag::GridLimit);
  REQUIRE(lim.grid.has_value());
  CHECK(GridCopula::cdf_distance(limit_grid(lim, 32), GridCopula(32)) < 1e-4);
}

TEST_CASE("limit_grid materializes each classified tag") {
  LimitClass pi_lim;
  pi_lim.tag = LimitClass::Tag::IndependencePi;
  CHECK(GridCopula::cdf_distance(limit_grid(pi_lim, 8), GridCopula(8)) < 1e-15);
  LimitClass m_lim;
  m_lim.tag = LimitClass::Tag::ComonotoneM;
  CHECK(GridCopula::cdf_distance(limit_grid(m_lim, 8), m_grid(8)) < 1e-15);
  LimitClass half;
  half.tag = LimitClass::Tag::HalfMHalfW;
  const GridCopula hw = limit_grid(half, 8);
  const GridCopula expect = discretize(CopulaExpr::mardia(0.5, 0.5), 8);
  CHECK(GridCopula::cdf_distance(hw, expect) < 1e-15);
  LimitClass und;
  und.tag = LimitClass::Tag::Undefined;
  CHECK_THROWS_AS(limit_grid(und, 8), ParameterError);
}
