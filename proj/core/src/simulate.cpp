#include "copmix/simulate.hpp"

#include <cmath>
#include <limits>

#include "copmix/errors.hpp"
#include "copmix/noise.hpp"
#include "copmix/rng.hpp"

namespace copmix {

namespace {

double kernel_step(const CopulaExpr& c, double x, Rng& rng) {
  using Kind = CopulaExpr::Kind;
  switch (c.kind()) {
    case Kind::Pi: return rng.uniform();
    case Kind::M: return x;
    case Kind::W: return 1.0 - x;
    case Kind::Mardia: {
      const double u = rng.uniform();
      if (u < c.mardia_a()) return x;
      if (u < c.mardia_a() + c.mardia_b()) return 1.0 - x;
      return rng.uniform();
    }
    case Kind::Convex: {
      const double u = rng.uniform();
      const auto& w = c.weights();
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        acc += w[i];
        if (u < acc) return kernel_step(c.components()[i], x, rng);
      }
      return kernel_step(c.components().back(), x, rng);
    }
    case Kind::PerturbPi:
      if (rng.uniform() < c.theta()) return rng.uniform();
      return kernel_step(c.base(), x, rng);
    case Kind::PerturbM:
      if (rng.uniform() < c.theta()) return x;
      return kernel_step(c.base(), x, rng);
    case Kind::FoldPower: {
      // the lag-n kernel is n applications of the base kernel
      double y = x;
      for (int i = 0; i < c.power_n(); ++i) y = kernel_step(c.base(), y, rng);
      return y;
    }
    case Kind::Grid: {
      const double y = c.grid_ref().conditional_quantile(x, rng.uniform());
      if (!(y >= 0.0 && y <= 1.0))
        throw NumericError("conditional inversion left [0,1] at x = " + std::to_string(x));
      return y;
    }
  }
  throw ParameterError("unknown copula kind");
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

ChainPath sample_chain(const CopulaExpr& c, int n_steps, std::uint64_t seed) {
  if (n_steps < 1) throw ParameterError("chain length must be >= 1");
  ChainPath path;
  path.generator = c.describe();
  path.seed = seed;
  path.values.reserve(static_cast<std::size_t>(n_steps));
  Rng rng(seed, 0);
  double x = rng.uniform();
  path.values.push_back(x);
  for (int t = 1; t < n_steps; ++t) {
    x = kernel_step(c, x, rng);
    path.values.push_back(x);
  }
  return path;
}

std::array<double, 2> sample_pair(const CopulaExpr& c, Rng& rng) {
  const double u = rng.uniform();
  return {u, kernel_step(c, u, rng)};
}

GridCopula empirical_lag_copula(const ChainPath& path, int lag, int m) {
  if (lag < 1) throw ParameterError("lag must be >= 1");
  if (m < 1) throw ParameterError("resolution must be >= 1");
  const std::size_t n = path.values.size();
  const std::size_t need = static_cast<std::size_t>(lag) + 10u * static_cast<std::size_t>(m) * m;
  if (n < need)
    throw SampleSizeError("lag copula at lag " + std::to_string(lag) + ", m = " +
                          std::to_string(m) + " needs " + std::to_string(need) +
                          " observations, got " + std::to_string(n));
  std::vector<std::array<double, 2>> pairs;
  pairs.reserve(n - static_cast<std::size_t>(lag));
  for (std::size_t t = 0; t + static_cast<std::size_t>(lag) < n; ++t)
    pairs.push_back({path.values[t], path.values[t + static_cast<std::size_t>(lag)]});
  return empirical_copula(pairs, m);
}

MixingReport empirical_mixing(const ChainPath& path, const std::vector<int>& lags, int m) {
  MixingReport rep;
  rep.lags = lags;
  for (int lag : lags) {
    const GridCopula g = empirical_lag_copula(path, lag, m);
    rep.alpha.push_back(alpha_coefficient(g).value);
    rep.rho.push_back(rho_coefficient(g));
    rep.psi_prime_lower.push_back(psi_prime_lower(g));
  }

  const std::size_t n = path.values.size();
  const std::size_t sec_len = n / 8;
  for (int lag : lags) {
    const std::size_t need =
        static_cast<std::size_t>(lag) + 10u * static_cast<std::size_t>(m) * m;
    if (sec_len < need) {
      rep.alpha_err.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.rho_err.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    std::vector<double> sa, sr;
    for (int s = 0; s < 8; ++s) {
      ChainPath section;
      section.generator = path.generator;
      section.seed = path.seed;
      const auto begin = path.values.begin() + static_cast<std::ptrdiff_t>(s * sec_len);
      section.values.assign(begin, begin + static_cast<std::ptrdiff_t>(sec_len));
      const GridCopula g = empirical_lag_copula(section, lag, m);
      sa.push_back(alpha_coefficient(g).value);
      sr.push_back(rho_coefficient(g));
    }
    rep.alpha_err.push_back(sample_sd(sa));
    rep.rho_err.push_back(sample_sd(sr));
  }

  const auto fit = fit_log_decay(rep.lags, rep.alpha);
  rep.fitted_log_rate = fit.first;
  rep.fit_residual = fit.second;
  rep.alpha_nonvanishing = !rep.alpha.empty() && rep.alpha.back() > 0.2;
  return rep;
}

}  // namespace copmix
