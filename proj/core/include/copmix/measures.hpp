#ifndef COPMIX_MEASURES_HPP
#define COPMIX_MEASURES_HPP

#include "copmix/algebra.hpp"
#include "copmix/copula.hpp"

namespace copmix {

enum class MeasureTag { RhoS, Tau, Beta, Gamma, LambdaL, LambdaU };

const char* measure_name(MeasureTag t);

struct MeasureSet {
  double rho_s = 0.0;
  double tau = 0.0;
  double beta = 0.0;
  double gamma = 2.0;
  double lambda_l = 0.0;
  double lambda_u = 0.0;
};

struct TauResult {
  double value = 0.0;
  double error = 0.0;  // half the change between quadrature resolutions r and 2r
};

struct TailDependence {
  double lambda_l = 0.0;
  double lambda_u = 0.0;
  bool extrapolated = false;  // grid estimates are extrapolated, closed forms exact
  double error_l = 0.0;
  double error_u = 0.0;
};

/// Spearman's rho_s = 12 * int int C - 3.  Closed form on the symbolic
/// family, exact cell integration of the bilinear CDF on grids.
double spearman_rho(const CopulaExpr& c);

/// Kendall's tau = 1 - 4 * int int C_{,1} C_{,2}.  Closed form
/// (a-b)(a+b+2)/3 on the symbolic family; midpoint quadrature over the
/// cell-constant partial derivatives on grids, refined once for the
/// error estimate.
TauResult kendall_tau(const CopulaExpr& c, int quad_resolution = 256);

/// Blomqvist's beta = 4 C(1/2, 1/2) - 1.
double blomqvist_beta(const CopulaExpr& c);

/// Gini's gamma = 4 * int [C(u,u) + C(u,1-u)] du, without the conventional
/// -2 offset, so gamma(Pi) = 2 and gamma(M) = 3.
double gini_gamma(const CopulaExpr& c);

/// The conventionally centered variant gini_gamma - 2 (zero at independence).
double gini_gamma_centered(const CopulaExpr& c);

/// Lower/upper tail dependence.  Symbolic family: (a, a) for coefficients
/// (a, b).  Grids: first-order Richardson extrapolation along the diagonal
/// corners u = 1/m, 2/m, 4/m, flagged with an error estimate.
TailDependence tail_dependence(const CopulaExpr& c);

MeasureSet all_measures(const CopulaExpr& c, int quad_resolution = 256);

/// Closed-form measure of the n-fold power of a perturbed copula, without
/// building the expansion: Pi family scales by (1-theta)^n (plus the
/// independence offset for gamma), M family is the binomial mixture of
/// powers plus theta^n times the comonotone value.  Kendall's tau has no
/// such form (nonlinear) and throws UnsupportedMeasureError.
double perturbed_measure(const CopulaExpr& base, double theta, int n, MeasureTag which,
                         PerturbFamily family);

}  // namespace copmix

#endif  // COPMIX_MEASURES_HPP
