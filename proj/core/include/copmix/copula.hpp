#ifndef COPMIX_COPULA_HPP
#define COPMIX_COPULA_HPP

#include <memory>
#include <string>
#include <vector>

#include "copmix/grid.hpp"

namespace copmix {

/// Default checkerboard resolution used when an expression has to be forced
/// onto a grid and no operand suggests one.
inline constexpr int kDefaultResolution = 64;

/// Immutable symbolic copula expression.
///
/// Atoms are the independence copula Pi(u,v)=uv, the Frechet-Hoeffding
/// bounds M(u,v)=min(u,v) and W(u,v)=max(u+v-1,0), the two-parameter family
/// a*M + b*W + (1-a-b)*Pi, and checkerboard grids.  Combinators are convex
/// combinations, contamination by Pi or M with weight theta, and n-fold
/// transition powers.  Values are shared-immutable: copying is cheap and
/// concurrent evaluation is safe.
class CopulaExpr {
 public:
  enum class Kind { Pi, M, W, Mardia, Grid, Convex, PerturbPi, PerturbM, FoldPower };

  static CopulaExpr pi();
  static CopulaExpr m();
  static CopulaExpr w();
  /// a,b >= 0 and a+b <= 1.
  static CopulaExpr mardia(double a, double b);
  /// Requires the grid to pass validate().
  static CopulaExpr grid(GridCopula g);
  /// Nonnegative weights summing to 1 within 1e-12.
  static CopulaExpr convex(std::vector<double> weights, std::vector<CopulaExpr> components);
  /// (1-theta)*base + theta*Pi, theta in [0,1].
  static CopulaExpr perturb_pi(CopulaExpr base, double theta);
  /// (1-theta)*base + theta*M, theta in [0,1].
  static CopulaExpr perturb_m(CopulaExpr base, double theta);
  /// Symbolic n-fold transition power, n >= 1.
  static CopulaExpr fold_power(CopulaExpr base, int n);

  Kind kind() const;
  double mardia_a() const;
  double mardia_b() const;
  double theta() const;
  int power_n() const;
  const GridCopula& grid_ref() const;
  const std::vector<double>& weights() const;
  const std::vector<CopulaExpr>& components() const;
  const CopulaExpr& base() const;

  /// True when both handles share the same expression node.
  bool identical_to(const CopulaExpr& other) const { return node_ == other.node_; }

  /// Short human-readable rendering, e.g. "perturb_pi(M, 0.3)".
  std::string describe() const;

 private:
  struct Node;
  explicit CopulaExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// C(u,v).  Exact closed forms for symbolic parts; bilinear checkerboard CDF
/// for grids.  Boundary values honor the copula axioms exactly.
double eval_cdf(const CopulaExpr& c, double u, double v);

/// Derivative with respect to the first argument, i.e. the Markov transition
/// kernel P(next <= v | current = x).  Nondecreasing in v, 0 at v=0, 1 at v=1.
double conditional_cdf(const CopulaExpr& c, double x, double v);

/// Checkerboard approximation at resolution m via cell-wise inclusion-
/// exclusion; exact for atoms and exact under refinement of grids.
GridCopula discretize(const CopulaExpr& c, int m);

/// Largest checkerboard resolution appearing in the expression, or
/// kDefaultResolution when the expression is purely symbolic.
int resolution_hint(const CopulaExpr& c);

/// Largest checkerboard resolution appearing in the expression; 0 when the
/// expression is purely symbolic.
int max_grid_resolution(const CopulaExpr& c);

}  // namespace copmix

#endif  // COPMIX_COPULA_HPP
