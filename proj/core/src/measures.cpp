#include "copmix/measures.hpp"

#include <algorithm>
#include <cmath>

#include "copmix/errors.hpp"

namespace copmix {

namespace {

// Measures linear in C reduce over the expression tree: closed form on the
// symbolic atoms, a grid evaluator at the leaves.
template <class GridFn>
double linear_measure(const CopulaExpr& c, double on_m, double on_w, double on_pi,
                      const GridFn& gf) {
  using Kind = CopulaExpr::Kind;
  switch (c.kind()) {
    case Kind::Pi: return on_pi;
    case Kind::M: return on_m;
    case Kind::W: return on_w;
    case Kind::Mardia:
      return c.mardia_a() * on_m + c.mardia_b() * on_w +
             (1.0 - c.mardia_a() - c.mardia_b()) * on_pi;
    case Kind::Grid: return gf(c.grid_ref());
    case Kind::Convex: {
      double acc = 0.0;
      for (std::size_t i = 0; i < c.weights().size(); ++i)
        if (c.weights()[i] > 0.0)
          acc += c.weights()[i] * linear_measure(c.components()[i], on_m, on_w, on_pi, gf);
      return acc;
    }
    case Kind::PerturbPi:
      return (1.0 - c.theta()) * linear_measure(c.base(), on_m, on_w, on_pi, gf) +
             c.theta() * on_pi;
    case Kind::PerturbM:
      return (1.0 - c.theta()) * linear_measure(c.base(), on_m, on_w, on_pi, gf) +
             c.theta() * on_m;
    case Kind::FoldPower:
      return linear_measure(n_fold(c.base(), c.power_n()), on_m, on_w, on_pi, gf);
  }
  throw ParameterError("unknown expression kind");
}

double grid_spearman(const GridCopula& g) {
  const int m = g.m();
  double integral = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      integral += g.corner(i, j) + g.corner(i + 1, j) + g.corner(i, j + 1) +
                  g.corner(i + 1, j + 1);
  integral /= 4.0 * m * m;  // average of a bilinear function over a cell
  return 12.0 * integral - 3.0;
}

double grid_gamma(const GridCopula& g) {
  const int m = g.m();
  double diag = 0.0, anti = 0.0;
  for (int i = 0; i < m; ++i) {
    diag += (g.corner(i, i) + g.corner(i + 1, i + 1)) / 3.0 +
            (g.corner(i + 1, i) + g.corner(i, i + 1)) / 6.0;
    const int j = m - 1 - i;  // the segment v = 1-u crosses cell (i, m-1-i)
    anti += (g.corner(i, j) + g.corner(i + 1, j + 1)) / 6.0 +
            (g.corner(i + 1, j) + g.corner(i, j + 1)) / 3.0;
  }
  return 4.0 * (diag + anti) / m;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

const char* measure_name(MeasureTag t) {
  switch (t) {
    case MeasureTag::RhoS: return "rho_s";
    case MeasureTag::Tau: return "tau";
    case MeasureTag::Beta: return "beta";
    case MeasureTag::Gamma: return "gamma";
    case MeasureTag::LambdaL: return "lambda_l";
    case MeasureTag::LambdaU: return "lambda_u";
  }
  return "?";
}

double spearman_rho(const CopulaExpr& c) {
  return linear_measure(c, 1.0, -1.0, 0.0, grid_spearman);
}

double blomqvist_beta(const CopulaExpr& c) { return 4.0 * eval_cdf(c, 0.5, 0.5) - 1.0; }

double gini_gamma(const CopulaExpr& c) { return linear_measure(c, 3.0, 1.0, 2.0, grid_gamma); }

double gini_gamma_centered(const CopulaExpr& c) { return gini_gamma(c) - 2.0; }

TauResult kendall_tau(const CopulaExpr& c, int quad_resolution) {
  if (quad_resolution < 2) throw ParameterError("quadrature resolution must be >= 2");
  if (auto r = reduce_frechet(c)) {
    const double a = r->coef_m, b = r->coef_w;
    return TauResult{(a - b) * (a + b + 2.0) / 3.0, 0.0};
  }
  const GridCopula g = discretize(c, resolution_hint(c));
  const GridCopula gt = g.transpose();
  const auto quad = [&](int r) {
    double acc = 0.0;
    for (int p = 0; p < r; ++p) {
      const double u = (p + 0.5) / r;
      for (int q = 0; q < r; ++q) {
        const double v = (q + 0.5) / r;
        acc += g.conditional_cdf(u, v) * gt.conditional_cdf(v, u);
      }
    }
    return 1.0 - 4.0 * acc / (static_cast<double>(r) * r);
  };
  const double coarse = quad(quad_resolution);
  const double fine = quad(2 * quad_resolution);
  return TauResult{fine, std::abs(fine - coarse) / 2.0};
}

TailDependence tail_dependence(const CopulaExpr& c) {
  using Kind = CopulaExpr::Kind;
  switch (c.kind()) {
    case Kind::Pi: return {};
    case Kind::M: return {1.0, 1.0, false, 0.0, 0.0};
    case Kind::W: return {};  // both limits are 0 at the countermonotone bound
    case Kind::Mardia: return {c.mardia_a(), c.mardia_a(), false, 0.0, 0.0};
    case Kind::Grid: {
      const GridCopula& g = c.grid_ref();
      const int m = g.m();
      const auto low = [&](int k) { return g.corner(k, k) * m / k; };
      const auto up = [&](int k) {
        return (g.corner(m - k, m - k) - 1.0 + 2.0 * k / m) * m / k;
      };
      TailDependence out;
      out.extrapolated = true;
      if (m >= 4) {
        const double l1 = 2.0 * low(1) - low(2);
        const double l2 = 2.0 * low(2) - low(4);
        const double u1 = 2.0 * up(1) - up(2);
        const double u2 = 2.0 * up(2) - up(4);
        out.lambda_l = clamp01(l1);
        out.lambda_u = clamp01(u1);
        out.error_l = std::abs(l1 - l2);
        out.error_u = std::abs(u1 - u2);
      } else if (m >= 2) {
        out.lambda_l = clamp01(2.0 * low(1) - low(2));
        out.lambda_u = clamp01(2.0 * up(1) - up(2));
        out.error_l = out.error_u = 0.5;
      } else {
        out.lambda_l = clamp01(low(1));
        out.lambda_u = clamp01(up(1));
        out.error_l = out.error_u = 1.0;
      }
      return out;
    }
    case Kind::Convex: {
      TailDependence out;
      for (std::size_t i = 0; i < c.weights().size(); ++i) {
        const double w = c.weights()[i];
        if (w == 0.0) continue;
        const TailDependence part = tail_dependence(c.components()[i]);
        out.lambda_l += w * part.lambda_l;
        out.lambda_u += w * part.lambda_u;
        out.error_l += w * part.error_l;
        out.error_u += w * part.error_u;
        out.extrapolated = out.extrapolated || part.extrapolated;
      }
      return out;
    }
    case Kind::PerturbPi: {
      TailDependence out = tail_dependence(c.base());
      const double keep = 1.0 - c.theta();
      out.lambda_l *= keep;
      out.lambda_u *= keep;
      out.error_l *= keep;
      out.error_u *= keep;
      return out;
    }
    case Kind::PerturbM: {
      TailDependence out = tail_dependence(c.base());
      const double keep = 1.0 - c.theta();
      out.lambda_l = keep * out.lambda_l + c.theta();
      out.lambda_u = keep * out.lambda_u + c.theta();
      out.error_l *= keep;
      out.error_u *= keep;
      return out;
    }
    case Kind::FoldPower: return tail_dependence(n_fold(c.base(), c.power_n()));
  }
  throw ParameterError("unknown expression kind");
}

MeasureSet all_measures(const CopulaExpr& c, int quad_resolution) {
  MeasureSet out;
  out.rho_s = spearman_rho(c);
  out.tau = kendall_tau(c, quad_resolution).value;
  out.beta = blomqvist_beta(c);
  out.gamma = gini_gamma(c);
  const TailDependence tails = tail_dependence(c);
  out.lambda_l = tails.lambda_l;
  out.lambda_u = tails.lambda_u;
  return out;
}

namespace {

double measure_value(const CopulaExpr& e, MeasureTag which) {
  switch (which) {
    case MeasureTag::RhoS: return spearman_rho(e);
    case MeasureTag::Beta: return blomqvist_beta(e);
    case MeasureTag::Gamma: return gini_gamma(e);
    case MeasureTag::LambdaL: return tail_dependence(e).lambda_l;
    case MeasureTag::LambdaU: return tail_dependence(e).lambda_u;
    case MeasureTag::Tau: break;
  }
  throw UnsupportedMeasureError("no closed perturbation form for Kendall's tau");
}

}  // namespace

double perturbed_measure(const CopulaExpr& base, double theta, int n, MeasureTag which,
                         PerturbFamily family) {
  if (theta < 0.0 || theta > 1.0) throw ParameterError("theta must lie in [0, 1]");
  if (n < 1) throw ParameterError("fold power requires n >= 1");
  if (which == MeasureTag::Tau)
    throw UnsupportedMeasureError(
        "Kendall's tau is nonlinear in the copula; no closed perturbation form");

  if (family == PerturbFamily::Pi) {
    const double keep = std::pow(1.0 - theta, n);
    double value = keep == 0.0 ? 0.0 : keep * measure_value(n_fold(base, n), which);
    if (which == MeasureTag::Gamma) value += 2.0 * (1.0 - keep);
    return value;
  }

  // M family: binomial mixture of the first n powers plus theta^n at M.
  const double at_m = which == MeasureTag::Gamma ? 3.0 : 1.0;
  double acc = std::pow(theta, n) * at_m;
  double binom = 1.0;
  CopulaExpr power = base;
  for (int i = 1; i <= n; ++i) {
    binom *= static_cast<double>(n - i + 1) / static_cast<double>(i);
    if (i > 1) power = fold_product(power, base);
    const double w = binom * std::pow(theta, n - i) * std::pow(1.0 - theta, i);
    if (w != 0.0) acc += w * measure_value(power, which);
  }
  return acc;
}

}  // namespace copmix
