#include "copmix/algebra.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <utility>

#include "copmix/errors.hpp"

namespace copmix {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kCoeffTol = 1e-12;

double clamp_coeff(double x) {
  if (x < 0.0 && x > -1e-12) return 0.0;
  return x;
}

}  // namespace

FrechetCoeffs frechet_product(const FrechetCoeffs& x, const FrechetCoeffs& y) {
  FrechetCoeffs out;
  out.coef_m = x.coef_m * y.coef_m + x.coef_w * y.coef_w;
  out.coef_w = x.coef_m * y.coef_w + x.coef_w * y.coef_m;
  out.coef_pi = 1.0 - (out.coef_m + out.coef_w);
  return out;
}

std::optional<FrechetCoeffs> reduce_frechet(const CopulaExpr& c) {
  using Kind = CopulaExpr::Kind;
  switch (c.kind()) {
    case Kind::Pi: return FrechetCoeffs{0.0, 0.0, 1.0};
    case Kind::M: return FrechetCoeffs{1.0, 0.0, 0.0};
    case Kind::W: return FrechetCoeffs{0.0, 1.0, 0.0};
    case Kind::Mardia:
      return FrechetCoeffs{c.mardia_a(), c.mardia_b(), 1.0 - c.mardia_a() - c.mardia_b()};
    case Kind::Grid: return std::nullopt;
    case Kind::Convex: {
      FrechetCoeffs acc{0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < c.weights().size(); ++i) {
        const double w = c.weights()[i];
        if (w == 0.0) continue;
        auto r = reduce_frechet(c.components()[i]);
        if (!r) return std::nullopt;
        acc.coef_m += w * r->coef_m;
        acc.coef_w += w * r->coef_w;
        acc.coef_pi += w * r->coef_pi;
      }
      return acc;
    }
    case Kind::PerturbPi: {
      if (c.theta() == 1.0) return FrechetCoeffs{0.0, 0.0, 1.0};
      auto r = reduce_frechet(c.base());
      if (!r) return std::nullopt;
      const double t = c.theta();
      return FrechetCoeffs{(1.0 - t) * r->coef_m, (1.0 - t) * r->coef_w,
                           (1.0 - t) * r->coef_pi + t};
    }
    case Kind::PerturbM: {
      if (c.theta() == 1.0) return FrechetCoeffs{1.0, 0.0, 0.0};
      auto r = reduce_frechet(c.base());
      if (!r) return std::nullopt;
      const double t = c.theta();
      return FrechetCoeffs{(1.0 - t) * r->coef_m + t, (1.0 - t) * r->coef_w,
                           (1.0 - t) * r->coef_pi};
    }
    case Kind::FoldPower: {
      auto r = reduce_frechet(c.base());
      if (!r) return std::nullopt;
      return mardia_n_fold(r->coef_m, r->coef_w, c.power_n());
    }
  }
  return std::nullopt;
}

CopulaExpr from_frechet(const FrechetCoeffs& f) {
  const double a = clamp_coeff(f.coef_m);
  const double b = clamp_coeff(f.coef_w);
  const double p = clamp_coeff(f.coef_pi);
  if (std::abs(a + b + p - 1.0) > 1e-9)
    throw ParameterError("family coordinates must sum to 1");
  if (b == 0.0 && p == 0.0) return CopulaExpr::m();
  if (a == 0.0 && p == 0.0) return CopulaExpr::w();
  if (a == 0.0 && b == 0.0) return CopulaExpr::pi();
  return CopulaExpr::mardia(a, b);
}

GridCopula fold_product_grid(const GridCopula& a, const GridCopula& b) {
  if (a.m() != b.m())
    throw ResolutionError("fold product needs equal grid resolutions, got " +
                          std::to_string(a.m()) + " and " + std::to_string(b.m()));
  const int m = a.m();
  Eigen::Map<const RowMat> ma(a.masses().data(), m, m);
  Eigen::Map<const RowMat> mb(b.masses().data(), m, m);
  RowMat prod = static_cast<double>(m) * (ma * mb);
  std::vector<double> cells(prod.data(), prod.data() + static_cast<std::size_t>(m) * m);

  const double row_target = 1.0 / m;
  double drift = 0.0;
  for (int i = 0; i < m; ++i) {
    double rs = 0.0, cs = 0.0;
    for (int j = 0; j < m; ++j) {
      rs += cells[static_cast<std::size_t>(i) * m + j];
      cs += cells[static_cast<std::size_t>(j) * m + i];
    }
    drift = std::max({drift, std::abs(rs - row_target), std::abs(cs - row_target)});
  }
  if (drift > 1e-10) {
    std::cerr << "copmix: fold product marginal drift " << drift << " at m=" << m
              << ", renormalizing\n";
    for (int pass = 0; pass < 200; ++pass) {
      double worst = 0.0;
      for (int i = 0; i < m; ++i) {
        double rs = 0.0;
        for (int j = 0; j < m; ++j) rs += cells[static_cast<std::size_t>(i) * m + j];
        if (rs > 0.0)
          for (int j = 0; j < m; ++j) cells[static_cast<std::size_t>(i) * m + j] *= row_target / rs;
      }
      for (int j = 0; j < m; ++j) {
        double cs = 0.0;
        for (int i = 0; i < m; ++i) cs += cells[static_cast<std::size_t>(i) * m + j];
        if (cs > 0.0)
          for (int i = 0; i < m; ++i) cells[static_cast<std::size_t>(i) * m + j] *= row_target / cs;
        worst = std::max(worst, std::abs(cs - row_target));
      }
      if (worst < 1e-14) break;
    }
  }
  return GridCopula(m, std::move(cells));
}

CopulaExpr fold_product(const CopulaExpr& a, const CopulaExpr& b) {
  const auto ra = reduce_frechet(a);
  const auto rb = reduce_frechet(b);
  if (ra && rb) return from_frechet(frechet_product(*ra, *rb));
  if (ra && ra->coef_pi >= 1.0 - kCoeffTol) return CopulaExpr::pi();
  if (rb && rb->coef_pi >= 1.0 - kCoeffTol) return CopulaExpr::pi();
  if (ra && ra->coef_m >= 1.0 - kCoeffTol) return b;
  if (rb && rb->coef_m >= 1.0 - kCoeffTol) return a;

  const int m_a = max_grid_resolution(a);
  const int m_b = max_grid_resolution(b);
  int res;
  if (m_a > 0 && m_b > 0 && m_a != m_b) {
    const int hi = std::max(m_a, m_b);
    const int lo = std::min(m_a, m_b);
    if (hi % lo != 0)
      throw ResolutionError("grid resolutions " + std::to_string(m_a) + " and " +
                            std::to_string(m_b) + " are incompatible (neither divides the other)");
    res = hi;
  } else {
    res = std::max({m_a, m_b, 1});
  }
  GridCopula ga = discretize(a, res);
  GridCopula gb = discretize(b, res);
  return CopulaExpr::grid(fold_product_grid(ga, gb));
}

Grid3 star_product(const CopulaExpr& a, const CopulaExpr& b, int m) {
  if (m < 1) throw ParameterError("trivariate product requires m >= 1");
  GridCopula ga = discretize(a, m);
  GridCopula gb = discretize(b, m);
  Grid3 out(m);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      const double left = static_cast<double>(m) * ga.mass(i, k);
      if (left == 0.0) continue;
      for (int j = 0; j < m; ++j) out.at(i, k, j) = left * gb.mass(k, j);
    }
  return out;
}

GridCopula n_fold_grid(const GridCopula& g, int n) {
  if (n < 1) throw ParameterError("fold power requires n >= 1");
  std::optional<GridCopula> acc;
  GridCopula base = g;
  while (n > 0) {
    if (n & 1) acc = acc ? fold_product_grid(*acc, base) : base;
    n >>= 1;
    if (n > 0) base = fold_product_grid(base, base);
  }
  return *acc;
}

CopulaExpr n_fold(const CopulaExpr& c, int n) {
  if (n < 1) throw ParameterError("fold power requires n >= 1");
  if (n == 1) return c;
  if (auto r = reduce_frechet(c)) return from_frechet(mardia_n_fold(r->coef_m, r->coef_w, n));
  // Perturbation nodes have exact expansions that keep the contaminant
  // symbolic; materializing it onto the base grid would cost O(1/m^2) in any
  // downstream measure.
  if (c.kind() == CopulaExpr::Kind::PerturbPi)
    return perturb_pi_n_fold(c.base(), c.theta(), n);
  if (c.kind() == CopulaExpr::Kind::PerturbM && n <= 64)
    return perturb_m_n_fold(c.base(), c.theta(), n);
  const int m = resolution_hint(c);
  return CopulaExpr::grid(n_fold_grid(discretize(c, m), n));
}

std::vector<ExpansionTerm> convex_expand(const std::vector<double>& weights,
                                         const std::vector<CopulaExpr>& components, int n,
                                         std::size_t term_cap) {
  if (weights.size() != components.size() || weights.empty())
    throw ParameterError("expansion needs matching, nonempty weight and component lists");
  if (n < 1) throw ParameterError("expansion requires n >= 1");
  const std::size_t k = weights.size();
  double count = 1.0;
  for (int s = 0; s < n; ++s) {
    count *= static_cast<double>(k);
    if (count > static_cast<double>(term_cap))
      throw BlowupError("expansion has " + std::to_string(k) + "^" + std::to_string(n) +
                        " terms, over the cap of " + std::to_string(term_cap));
  }
  std::vector<ExpansionTerm> terms;
  terms.reserve(static_cast<std::size_t>(count));
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    ExpansionTerm t;
    t.factors = idx;
    t.weight = 1.0;
    for (int s = 0; s < n; ++s) t.weight *= weights[static_cast<std::size_t>(idx[s])];
    terms.push_back(std::move(t));
    int pos = n - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == static_cast<int>(k) - 1) {
      idx[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
  }
  return terms;
}

FrechetCoeffs mardia_n_fold(double a, double b, int n) {
  if (a < 0.0 || b < 0.0 || a + b > 1.0 + 1e-12)
    throw ParameterError("family coordinates must be nonnegative with a + b <= 1");
  if (n < 1) throw ParameterError("fold power requires n >= 1");
  const double s = std::pow(a + b, n);
  const double d = std::pow(a - b, n);
  FrechetCoeffs out;
  out.coef_m = clamp_coeff(0.5 * (s + d));
  out.coef_w = clamp_coeff(0.5 * (s - d));
  out.coef_pi = clamp_coeff(1.0 - s);
  return out;
}

CopulaExpr perturb_pi_n_fold(const CopulaExpr& base, double theta, int n) {
  if (theta < 0.0 || theta > 1.0) throw ParameterError("theta must lie in [0, 1]");
  if (n < 1) throw ParameterError("fold power requires n >= 1");
  const double w = std::pow(1.0 - theta, n);
  return CopulaExpr::convex({w, 1.0 - w},
                            {CopulaExpr::fold_power(base, n), CopulaExpr::pi()});
}

CopulaExpr perturb_m_n_fold(const CopulaExpr& base, double theta, int n, int n_cap) {
  if (theta < 0.0 || theta > 1.0) throw ParameterError("theta must lie in [0, 1]");
  if (n < 1) throw ParameterError("fold power requires n >= 1");
  if (n > n_cap)
    throw BlowupError("binomial expansion capped at n = " + std::to_string(n_cap) +
                      "; use the grid power for larger n");
  std::vector<double> weights;
  std::vector<CopulaExpr> parts;
  weights.reserve(static_cast<std::size_t>(n) + 1);
  parts.reserve(static_cast<std::size_t>(n) + 1);
  double binom = 1.0;  // binom(n, 0)
  double total = 0.0;
  for (int i = 1; i <= n; ++i) {
    binom *= static_cast<double>(n - i + 1) / static_cast<double>(i);
    const double w = binom * std::pow(theta, n - i) * std::pow(1.0 - theta, i);
    weights.push_back(w);
    parts.push_back(CopulaExpr::fold_power(base, i));
    total += w;
  }
  const double w_m = std::pow(theta, n);
  weights.push_back(w_m);
  parts.push_back(CopulaExpr::m());
  total += w_m;
  // The exact weights sum to 1; shed the floating-point dust so the convex
  // combination constructor sees a clean simplex point.
  for (double& w : weights) w /= total;
  return CopulaExpr::convex(weights, parts);
}

LemmaBoundResult lemma_bound_check(const GridCopula& g, int n) {
  if (n < 1) throw ParameterError("fold power requires n >= 1");
  LemmaBoundResult out;
  out.density_floor = g.min_density();
  out.power_floor = n_fold_grid(g, n).min_density();
  out.holds = out.power_floor >= std::pow(out.density_floor, n) - 1e-10;
  return out;
}

LimitClass limit_classify(const CopulaExpr& c, int max_power_log2, double cauchy_tol) {
  using Tag = LimitClass::Tag;
  if (auto r = reduce_frechet(c)) {
    LimitClass out;
    const double s = r->coef_m + r->coef_w;
    if (s < 1.0 - kCoeffTol) {
      out.tag = Tag::IndependencePi;
    } else if (r->coef_w <= kCoeffTol) {
      out.tag = Tag::ComonotoneM;
    } else if (r->coef_m <= kCoeffTol) {
      out.tag = Tag::Undefined;
      out.diagnostic = "powers alternate between the countermonotone and comonotone bounds";
    } else {
      out.tag = Tag::HalfMHalfW;
    }
    return out;
  }

  switch (c.kind()) {
    case CopulaExpr::Kind::PerturbPi:
      if (c.theta() > 0.0) {
        LimitClass out;
        out.tag = Tag::IndependencePi;
        return out;
      }
      return limit_classify(c.base(), max_power_log2, cauchy_tol);
    case CopulaExpr::Kind::PerturbM:
      if (c.theta() < 1.0) {
        LimitClass base_limit = limit_classify(c.base(), max_power_log2, cauchy_tol);
        if (base_limit.tag == Tag::Undefined)
          base_limit.diagnostic = "base power sequence has no limit";
        return base_limit;
      }
      break;  // theta == 1 reduces to M above; unreachable
    default: break;
  }

  const int m = resolution_hint(c);
  const GridCopula g = discretize(c, m);
  GridCopula cur = g;
  for (int it = 0; it < max_power_log2; ++it) {
    GridCopula next = fold_product_grid(cur, cur);
    if (GridCopula::cdf_distance(next, cur) < cauchy_tol) {
      // Guard against even/odd oscillation: a fixed point of squaring must
      // also be stable under one more factor.
      GridCopula step = fold_product_grid(next, g);
      if (GridCopula::cdf_distance(step, next) < cauchy_tol) {
        LimitClass out;
        out.tag = Tag::GridLimit;
        out.grid = std::move(next);
        return out;
      }
    }
    cur = std::move(next);
  }
  LimitClass out;
  out.tag = Tag::Undefined;
  out.diagnostic = "no Cauchy convergence up to the 2^" + std::to_string(max_power_log2) +
                   "-fold power at resolution m=" + std::to_string(m);
  return out;
}

GridCopula limit_grid(const LimitClass& limit, int m) {
  using Tag = LimitClass::Tag;
  switch (limit.tag) {
    case Tag::IndependencePi: return discretize(CopulaExpr::pi(), m);
    case Tag::ComonotoneM: return discretize(CopulaExpr::m(), m);
    case Tag::HalfMHalfW: return discretize(CopulaExpr::mardia(0.5, 0.5), m);
    case Tag::GridLimit:
      if (!limit.grid) throw ParameterError("grid limit carries no payload");
      return discretize(CopulaExpr::grid(*limit.grid), m);
    case Tag::Undefined:
      throw ParameterError("power sequence has no limit" +
                           (limit.diagnostic.empty() ? std::string()
                                                     : ": " + limit.diagnostic));
  }
  throw ParameterError("unknown limit tag");
}

}  // namespace copmix
