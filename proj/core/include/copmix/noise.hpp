#ifndef COPMIX_NOISE_HPP
#define COPMIX_NOISE_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "copmix/copula.hpp"
#include "copmix/grid.hpp"
#include "copmix/rng.hpp"

namespace copmix {

/// One-dimensional distribution with CDF, generalized (left-continuous)
/// quantile, sampling, and a finite effective support (unbounded variants
/// truncated at 1e-9 tail mass).
class Distribution1D {
 public:
  enum class Kind { Uniform, Normal, PointMass, Empirical, Table };

  static Distribution1D uniform(double lo, double hi);
  static Distribution1D normal(double mean, double sd);
  static Distribution1D point_mass(double c);
  /// Sorts the sample; the CDF is the usual right-continuous step function.
  static Distribution1D empirical(std::vector<double> sample);
  /// Piecewise-linear CDF through (xs, ps); xs strictly increasing, ps
  /// nondecreasing from ~0 to ~1 (clamped).
  static Distribution1D table(std::vector<double> xs, std::vector<double> ps);

  Kind kind() const { return kind_; }
  double cdf(double x) const;
  double quantile(double p) const;
  double sample(Rng& rng) const { return quantile(rng.uniform()); }

  /// Effective support bounds (exact for bounded variants, 1e-9 tail
  /// truncation for Normal).
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  /// Distribution of X + c.
  Distribution1D shifted(double c) const;

  /// Raw parameters: (lo,hi), (mean,sd) or the point location.
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  /// Sorted sample (Empirical) or table abscissae (Table); empty otherwise.
  const std::vector<double>& knots() const { return xs_; }
  /// Table CDF levels; empty for other variants.
  const std::vector<double>& levels() const { return ps_; }

  std::string describe() const;

 private:
  Distribution1D() = default;
  Kind kind_ = Kind::PointMass;
  double a_ = 0.0, b_ = 0.0;  // (lo,hi) | (mean,sd) | (c,unused)
  std::vector<double> xs_, ps_;
  double lo_ = 0.0, hi_ = 0.0;
};

/// CDF of the sum of independent draws from f and g.  Point masses shift
/// exactly; empirical atoms average exactly; otherwise quadrature over the
/// quantile reparameterization, tabulated on 4097 points.
Distribution1D sum_cdf(const Distribution1D& f, const Distribution1D& g);

/// Trivariate copulas supported for noise experiments: convex mixtures of
/// the upper bound min(u1,u2,u3) and independence u1*u2*u3 (the lower
/// Frechet bound is not a copula in three dimensions).
struct Copula3 {
  explicit Copula3(double weight_m);
  double weight_m() const { return weight_m_; }
  double cdf(double u1, double u2, double u3) const;

 private:
  double weight_m_;
};

/// Checkerboard copula of (X_1+Z_1, ..., X_s+Z_s, X_{s+1}, ..., X_k) for
/// independent noise components Z_i ~ noises[i]; s = noises.size().
/// Component i has marginal CDF marginals[i].  k = 2 here, k = 3 in the
/// trivariate overloads.
GridCopula noisy_copula_independent(const CopulaExpr& c,
                                    const std::vector<Distribution1D>& marginals,
                                    const std::vector<Distribution1D>& noises, int m,
                                    int threads = 1);

/// Same with a single shock variable added to the first s components.
GridCopula noisy_copula_common(const CopulaExpr& c, const std::vector<Distribution1D>& marginals,
                               const Distribution1D& shock, int s, int m, int threads = 1);

Grid3 noisy_copula_independent3(const Copula3& c, const std::vector<Distribution1D>& marginals,
                                const std::vector<Distribution1D>& noises, int m,
                                int threads = 1);
Grid3 noisy_copula_common3(const Copula3& c, const std::vector<Distribution1D>& marginals,
                           const Distribution1D& shock, int s, int m, int threads = 1);

/// Coordinate permutation of a result grid (noise components permuted).
GridCopula apply_permutation(const GridCopula& g, const std::vector<int>& perm);
Grid3 apply_permutation(const Grid3& g, const std::vector<int>& perm);

/// Empirical checkerboard copula by rank transform (ties broken by input
/// order); rank intervals are split across bins by exact overlap, so margins
/// come out uniform.  Requires at least 10 * m^2 samples.
GridCopula empirical_copula(const std::vector<std::array<double, 2>>& samples, int m);
Grid3 empirical_copula3(const std::vector<std::array<double, 3>>& samples, int m);

struct NoiseSpec {
  enum class Mode { Independent, Common };
  Mode mode = Mode::Independent;
  // Per perturbed component for Independent (length s); the single shock
  // distribution for Common.
  std::vector<Distribution1D> dists;
  int s = 0;
  std::optional<std::vector<int>> permutation;
};

/// Dispatch on the mode and apply the optional permutation.
GridCopula apply_noise(const CopulaExpr& c, const std::vector<Distribution1D>& marginals,
                       const NoiseSpec& spec, int m, int threads = 1);

}  // namespace copmix

#endif  // COPMIX_NOISE_HPP
