#ifndef COPMIX_ALGEBRA_HPP
#define COPMIX_ALGEBRA_HPP

#include <optional>
#include <vector>

#include "copmix/copula.hpp"
#include "copmix/grid.hpp"

namespace copmix {

/// Which copula contaminates the base in a perturbation family.
enum class PerturbFamily { Pi, M };

/// Coordinates of a copula in the closed family {M, W, Pi}: nonnegative
/// weights summing to 1.  The fold product acts on these by
///   M*M = W*W = M,   M*W = W*M = W,   Pi absorbs everything,
/// extended bilinearly.
struct FrechetCoeffs {
  double coef_m = 0.0;
  double coef_w = 0.0;
  double coef_pi = 1.0;
};

/// One term of the full n-step expansion of a convex combination: the
/// ordered factor indices and the product of their selection weights.
struct ExpansionTerm {
  double weight = 0.0;
  std::vector<int> factors;  // indices into the component list, length n
};

/// Long-run behaviour of the n-fold power sequence.
struct LimitClass {
  enum class Tag { IndependencePi, ComonotoneM, HalfMHalfW, Undefined, GridLimit };
  Tag tag = Tag::Undefined;
  std::optional<GridCopula> grid;  // payload for GridLimit only
  std::string diagnostic;          // set when tag == Undefined from numerics
};

struct LemmaBoundResult {
  double density_floor = 0.0;  // K: minimum cell density of the input grid
  double power_floor = 0.0;    // minimum cell density of the n-fold grid
  bool holds = false;          // power_floor >= K^n - 1e-10
};

/// Exact product table on {M, W, Pi} coordinates.
FrechetCoeffs frechet_product(const FrechetCoeffs& x, const FrechetCoeffs& y);

/// Coordinates of an expression in the closed family, when it lies there
/// (no grid atoms anywhere in the tree); nullopt otherwise.
std::optional<FrechetCoeffs> reduce_frechet(const CopulaExpr& c);

/// Canonical expression for given family coordinates (returns the M, W or Pi
/// atom when a coordinate is 1).
CopulaExpr from_frechet(const FrechetCoeffs& f);

/// Fold product A*B: the copula of two states separated by one intermediate
/// step.  Symbolic within the closed family; otherwise both operands are
/// discretized to a common resolution and multiplied as kernels
/// (mass_C = m * mass_A . mass_B).  Grid resolutions must be equal or one
/// must divide the other.
CopulaExpr fold_product(const CopulaExpr& a, const CopulaExpr& b);

/// Grid-level fold product at equal resolutions.
GridCopula fold_product_grid(const GridCopula& a, const GridCopula& b);

/// Trivariate product: the copula of three consecutive states
/// (x, middle, z), cell masses m * mass_A[i][k] * mass_B[k][j].
Grid3 star_product(const CopulaExpr& a, const CopulaExpr& b, int m);

/// n-fold transition power C^n; C^1 = C.  Symbolic within the closed family,
/// repeated squaring on grids.
CopulaExpr n_fold(const CopulaExpr& c, int n);
GridCopula n_fold_grid(const GridCopula& g, int n);

/// All k^n ordered factor selections of an n-step expansion, with product
/// weights.  Throws BlowupError when k^n exceeds the cap.
std::vector<ExpansionTerm> convex_expand(const std::vector<double>& weights,
                                         const std::vector<CopulaExpr>& components, int n,
                                         std::size_t term_cap = std::size_t{1} << 20);

/// Closed-form n-fold coordinates of the two-parameter family:
/// ( [(a+b)^n + (a-b)^n]/2, [(a+b)^n - (a-b)^n]/2, 1 - (a+b)^n ).
FrechetCoeffs mardia_n_fold(double a, double b, int n);

/// Closed-form n-fold power of the Pi-contaminated copula:
/// (1-theta)^n C^n + (1 - (1-theta)^n) Pi.
CopulaExpr perturb_pi_n_fold(const CopulaExpr& base, double theta, int n);

/// Closed-form n-fold power of the M-contaminated copula: binomial mixture
/// of C^1..C^n plus theta^n M.  n is capped (binomial expansion size).
CopulaExpr perturb_m_n_fold(const CopulaExpr& base, double theta, int n, int n_cap = 64);

/// Density floor propagation: if every cell density is >= K then the n-fold
/// grid has density >= K^n.
LemmaBoundResult lemma_bound_check(const GridCopula& g, int n);

/// Classify the limit of C^n: exact on the closed family and on
/// perturbations of classifiable bases, numeric Cauchy iteration otherwise.
LimitClass limit_classify(const CopulaExpr& c, int max_power_log2 = 16,
                          double cauchy_tol = 1e-8);

/// Materialize a classified limit at resolution m (GridLimit returns its
/// payload resampled; Undefined throws).
GridCopula limit_grid(const LimitClass& limit, int m);

}  // namespace copmix

#endif  // COPMIX_ALGEBRA_HPP
