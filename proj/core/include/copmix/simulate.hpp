#ifndef COPMIX_SIMULATE_HPP
#define COPMIX_SIMULATE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "copmix/copula.hpp"
#include "copmix/grid.hpp"
#include "copmix/mixing.hpp"
#include "copmix/rng.hpp"

namespace copmix {

/// A stationary [0,1]-valued Markov chain driven by a copula kernel.
/// Reproducible bit-exactly from (generator, seed, length).
struct ChainPath {
  std::vector<double> values;
  std::string generator;
  std::uint64_t seed = 0;
  int n_steps() const { return static_cast<int>(values.size()); }
};

/// Draws X_0 uniform and each successor from the conditional kernel
/// v -> d/du C(u,v) at u = X_t.  Symbolic Frechet-type generators use the
/// mixture shortcut (copy / reflect / fresh uniform); convex combinations
/// sample a component index and step it; fold powers step the base kernel
/// n times; grids invert the piecewise-linear conditional exactly.
ChainPath sample_chain(const CopulaExpr& c, int n_steps, std::uint64_t seed);

/// One draw (U, V) from the copula: U uniform, V from the conditional
/// kernel at U.
std::array<double, 2> sample_pair(const CopulaExpr& c, Rng& rng);

/// Rank-based checkerboard estimate of the joint law of (X_t, X_{t+lag}).
/// Needs at least lag + 10 m^2 observations.
GridCopula empirical_lag_copula(const ChainPath& path, int lag, int m);

/// Alpha / rho / psi-prime estimates per lag on empirical lag copulas at
/// resolution m.  Error columns hold the standard deviation of the
/// estimates over 8 contiguous path sections (NaN when the sections are
/// too short to estimate on).  The log-decay fit runs on the alpha column.
MixingReport empirical_mixing(const ChainPath& path, const std::vector<int>& lags, int m);

}  // namespace copmix

#endif  // COPMIX_SIMULATE_HPP
