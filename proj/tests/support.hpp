#ifndef COPMIX_TESTS_SUPPORT_HPP
#define COPMIX_TESTS_SUPPORT_HPP

#include <vector>

#include "copmix/copula.hpp"
#include "copmix/grid.hpp"
#include "copmix/rng.hpp"

namespace copmix_test {

// Handcrafted 4x4 checkerboard: mass = P/4 with P = I/2 + S/4 + S^2/4 for
// the cyclic shift S.  All reference values below were computed separately
// with exact rational arithmetic (SVD numerically) and are frozen here.
inline copmix::GridCopula fixed_grid4() {
  const double h = 0.125, q = 0.0625;
  return copmix::GridCopula(4, {
      h, q, q, 0,
      0, h, q, q,
      q, 0, h, q,
      q, q, 0, h,
  });
}

inline constexpr double kFixed4RhoS = 9.0 / 32.0;
inline constexpr double kFixed4Tau = 13.0 / 64.0;
inline constexpr double kFixed4Beta = 0.25;
inline constexpr double kFixed4Gamma = 2.25;
inline constexpr double kFixed4Alpha = 0.125;
inline constexpr double kFixed4Rho = 0.5;
inline constexpr double kFixed4LambdaL = 0.375;
inline constexpr double kFixed4LambdaU = 0.375;

inline copmix::GridCopula m_grid(int m) {
  std::vector<double> mass(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) mass[static_cast<std::size_t>(i) * m + i] = 1.0 / m;
  return copmix::GridCopula(m, std::move(mass));
}

inline copmix::GridCopula w_grid(int m) {
  std::vector<double> mass(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    mass[static_cast<std::size_t>(i) * m + (m - 1 - i)] = 1.0 / m;
  return copmix::GridCopula(m, std::move(mass));
}

/// Random symbolic-or-grid expression for property tests.
inline copmix::CopulaExpr random_base(copmix::Rng& rng) {
  switch (rng.uniform_index(4)) {
    case 0: return copmix::CopulaExpr::m();
    case 1: return copmix::CopulaExpr::w();
    case 2: {
      const double a = 0.9 * rng.uniform();
      const double b = (1.0 - a) * rng.uniform();
      return copmix::CopulaExpr::mardia(a, b);
    }
    default:
      return copmix::CopulaExpr::grid(copmix::GridCopula::random(16, rng.next_u64()));
  }
}

}  // namespace copmix_test

#endif  // COPMIX_TESTS_SUPPORT_HPP
