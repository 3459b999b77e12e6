#ifndef COPMIX_MIXING_HPP
#define COPMIX_MIXING_HPP

#include <limits>
#include <optional>
#include <vector>

#include "copmix/algebra.hpp"
#include "copmix/copula.hpp"
#include "copmix/grid.hpp"

namespace copmix {

/// Strong-mixing coefficient of a checkerboard copula together with the
/// achieving sets.  For cell-constant densities the Borel supremum is
/// attained on unions of grid cells, so set_a / set_b are row and column
/// cell indices and `value` is |sum over set_a x set_b of (mass - 1/m^2)|.
struct AlphaSolution {
  double value = 0.0;
  std::vector<int> set_a;
  std::vector<int> set_b;
  bool exact = true;  // brute force (m <= 20) vs multi-start heuristic
};

struct MixingReport {
  std::vector<int> lags;
  std::vector<double> alpha;
  std::vector<double> rho;
  std::vector<double> psi_prime_lower;
  // Filled by the empirical estimators only (Monte Carlo section spread).
  std::vector<double> alpha_err;
  std::vector<double> rho_err;
  double fitted_log_rate = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  // The alpha column stays at the 1/4 ceiling through the deepest lag:
  // the base chain does not alpha-mix.
  bool alpha_nonvanishing = false;
};

struct Certificate {
  enum class Kind { AlphaQuarter, RhoBelowOne };
  Kind kind = Kind::AlphaQuarter;
  int s = 0;                 // product length
  std::vector<int> witness;  // ordered component indices of the product
  double attained = 0.0;
};

/// Search outcome: absence of a certificate is a negative result, not an
/// error; the best value found and where it occurred are still reported.
struct CertificateSearch {
  std::optional<Certificate> certificate;
  double attained_min = std::numeric_limits<double>::infinity();
  std::vector<int> best_witness;
  int best_s = 0;
  bool found() const { return certificate.has_value(); }
};

/// Exact by row-subset enumeration with the closed-form optimal column set
/// for m <= 20; alternating maximization from 32 deterministic random
/// starts above that.
AlphaSolution alpha_coefficient(const GridCopula& g);

/// Maximal-correlation coefficient: second singular value of the doubly
/// stochastic matrix m * mass.
double rho_coefficient(const GridCopula& g);

/// Certified lower bound for the psi-prime coefficient: the minimum cell
/// density m^2 * min(mass).
double psi_prime_lower(const GridCopula& g);

/// Mixing coefficients of the theta-perturbed chain at lags 1..n_max,
/// computed on the closed-form lag-n copula grids at resolution m.
MixingReport mixing_scan(const CopulaExpr& c, double theta, PerturbFamily family, int n_max,
                         int m);

/// Breadth-first search over ordered fold products of length 1..s_max for
/// alpha < 1/4 (resp. rho < 1); a hit certifies the mixture chain mixes.
CertificateSearch alpha_certificate(const std::vector<CopulaExpr>& components,
                                    const std::vector<double>& weights, int s_max, int m);
CertificateSearch rho_certificate(const std::vector<CopulaExpr>& components,
                                  const std::vector<double>& weights, int s_max, int m);

/// Least-squares slope of log(value) against lag, ignoring values below
/// 1e-12; (NaN, NaN) when fewer than 3 lags remain.  Second element is the
/// RMS fit residual.
std::pair<double, double> fit_log_decay(const std::vector<int>& lags,
                                        const std::vector<double>& values);

}  // namespace copmix

#endif  // COPMIX_MIXING_HPP
