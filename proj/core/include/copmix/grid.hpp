#ifndef COPMIX_GRID_HPP
#define COPMIX_GRID_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace copmix {

/// Result of checking a grid against the copula axioms.  `passed` is true
/// iff `violations` is empty.
struct ValidationReport {
  struct Violation {
    std::string check;     // "negative cell", "row marginal", ...
    std::string location;  // human-readable index, e.g. "row 3"
    double magnitude = 0.0;
  };

  bool passed = true;
  std::vector<Violation> violations;
  double worst_cell = 0.0;      // most negative cell (0 if none)
  double worst_marginal = 0.0;  // largest |row or column sum - 1/m|
  double total_mass_error = 0.0;
};

/// m x m checkerboard copula: cell (i,j) holds the probability mass of the
/// square ((i)/m,(i+1)/m] x ((j)/m,(j+1)/m] (0-based cells).  Uniform margins
/// mean every row and column sums to 1/m.  The CDF of such a measure is
/// piecewise bilinear and is evaluated exactly from cumulative corner sums.
///
/// Instances are immutable after construction and safe to share across
/// threads.  Construction does not enforce validity; use validate() to
/// inspect a grid, and CopulaExpr::grid() to require validity.
class GridCopula {
 public:
  /// Uniform grid (the checkerboard of the independence copula).
  explicit GridCopula(int m);

  /// From row-major masses; `mass.size()` must equal m*m.
  GridCopula(int m, std::vector<double> mass);

  int m() const { return m_; }
  double mass(int i, int j) const { return mass_[static_cast<std::size_t>(i) * m_ + j]; }
  const std::vector<double>& masses() const { return mass_; }

  /// Corner CDF value C(i/m, j/m), i,j in [0,m]; exact partial sums.
  double corner(int i, int j) const {
    return cum_[static_cast<std::size_t>(i) * (m_ + 1) + j];
  }

  /// CDF at an arbitrary point (bilinear within cells).  Boundary values are
  /// clamped to the copula axioms: C(u,0)=C(0,v)=0, C(u,1)=u, C(1,v)=v.
  double cdf(double u, double v) const;

  /// Kernel C_{,1}(x,v): conditional CDF of the next state given the current
  /// one lies in the cell containing x.  Piecewise linear in v.
  double conditional_cdf(double x, double v) const;

  /// Inverse of the conditional kernel: smallest v with C_{,1}(x,v) >= p.
  /// Exact piecewise-linear inversion, no bisection.
  double conditional_quantile(double x, double p) const;

  /// Minimum cell density m^2 * min mass.
  double min_density() const;

  /// Exact refinement to resolution m*factor (each cell split factor x factor).
  GridCopula refine(int factor) const;

  /// Exact aggregation to resolution m/factor (m must be divisible).
  GridCopula coarsen(int factor) const;

  GridCopula transpose() const;

  /// Sup-norm distance between the CDFs of two same-resolution grids,
  /// evaluated over all corner points (where the max is attained for
  /// piecewise-bilinear CDFs).
  static double cdf_distance(const GridCopula& a, const GridCopula& b);

  /// Random valid grid: strictly positive i.i.d. cells balanced to uniform
  /// margins by Sinkhorn iteration.  Deterministic in (m, seed).
  static GridCopula random(int m, std::uint64_t seed);

 private:
  void build_corners();

  int m_;
  std::vector<double> mass_;  // row-major, m*m
  std::vector<double> cum_;   // (m+1)*(m+1) corner CDF values
};

ValidationReport validate(const GridCopula& g, double tol = 1e-10);

/// Trivariate checkerboard: cell masses on an m^3 lattice, x-major then y
/// then z.  Used for the three-consecutive-states copula and trivariate
/// noise outputs.
class Grid3 {
 public:
  explicit Grid3(int m);
  Grid3(int m, std::vector<double> mass);

  int m() const { return m_; }
  double mass(int i, int j, int k) const {
    return mass_[(static_cast<std::size_t>(i) * m_ + j) * m_ + k];
  }
  double& at(int i, int j, int k) {
    return mass_[(static_cast<std::size_t>(i) * m_ + j) * m_ + k];
  }
  const std::vector<double>& masses() const { return mass_; }

  double total_mass() const;
  /// Univariate margin of the given axis (0, 1 or 2), as cell masses.
  std::vector<double> margin(int axis) const;
  /// Sum out the middle coordinate, giving the (x,z) bivariate grid.
  GridCopula collapse_middle() const;
  /// Coordinate permutation: result cell (i0,i1,i2) = this cell at positions
  /// given by perm, i.e. new axis a takes the old axis perm[a].
  Grid3 permute(const std::array<int, 3>& perm) const;

 private:
  int m_;
  std::vector<double> mass_;
};

}  // namespace copmix

#endif  // COPMIX_GRID_HPP
